"""Numerical laboratory for the viscous sublayer of unstable Prandtl shear layers.

All computations use the boundary-layer scaled variables, in which the
Navier-Stokes viscosity is ``sqrt(nu)``.
"""

__version__ = "0.1.0"
