"""Shear profiles U(z), their heat evolution U_s(t, z) and the S operator.

In scaled variables the base flow is ``U_s(sqrt(nu) t, y)`` where U_s solves
``d_t U_s = d_zz U_s`` with ``U_s(t, 0) = 0``.  The S operator measures the
slow drift of this base flow away from its initial profile:

    S v = nu^{-1/2} (U_s(sqrt(nu) t) - U) . grad v + nu^{-1/2} v . grad (U_s - U).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import PchipInterpolator
from scipy.special import erf

from .errors import ConfigError, GridError, IllPosed
from .spectral import Field, Grid, VelocityField

__all__ = [
    "ShearProfile", "EvolvedBase", "FAMILIES", "erf_selfsimilar", "wall_jet",
    "tanh_shifted", "from_function", "load_table", "make_profile",
    "evolve_heat", "s_coefficient", "apply_s", "apply_s_vorticity",
]

FAMILIES = ("erf_selfsimilar", "wall_jet", "tanh_shifted", "custom_table")

WALL_TOL = 1e-12
FAR_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ShearProfile:
    """Base flow sampled on the y-nodes of ``grid``.

    ``exact`` optionally maps (z, derivative order 0..2) to analytic values;
    it is used for derivatives and for interpolation off the grid.
    """
    values: np.ndarray
    grid: Grid
    label: str
    far_field: float
    analytic_family: Optional[str] = None
    params: dict = field(default_factory=dict)
    exact: Optional[Callable[[np.ndarray, int], np.ndarray]] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_y,):
            raise GridError("profile values must match the grid's y-nodes")
        if not np.all(np.isfinite(v)) or not np.isfinite(self.far_field):
            raise IllPosed("profile values and far field must be finite")
        if abs(v[0]) > WALL_TOL:
            raise IllPosed(f"U(0) = {v[0]:.3e} but the wall value must vanish")
        if abs(v[-1] - self.far_field) > FAR_TOL * max(1.0, abs(self.far_field)):
            raise IllPosed("profile has not reached its far-field value at y_max")
        v = v.copy()
        v[0] = 0.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.analytic_family is not None and self.analytic_family not in FAMILIES:
            raise ConfigError(f"unknown profile family {self.analytic_family!r}")

    def derivative(self, order: int) -> np.ndarray:
        if order == 0:
            return np.asarray(self.values)
        if self.exact is not None:
            return self.exact(self.grid.y_nodes, order)
        return (self.grid.D1 if order == 1 else self.grid.D2) @ self.values

    def __call__(self, z, order: int = 0) -> np.ndarray:
        if self.exact is not None:
            return self.exact(np.asarray(z, dtype=float), order)
        from .spectral import interpolate_y
        return interpolate_y(self.grid, self.derivative(order), z)

    def on_grid(self, grid: Grid) -> "ShearProfile":
        """Resample onto another grid with the same y_max."""
        if grid.same_y(self.grid):
            return replace(self, grid=grid)
        if not np.isclose(grid.y_max, self.grid.y_max):
            raise GridError("profile resampling needs equal y_max")
        vals = self(grid.y_nodes)
        vals[0] = 0.0
        return replace(self, values=vals, grid=grid)

    def inflection_points(self) -> np.ndarray:
        """Interior nodes where U'' changes sign (Rayleigh's necessary condition)."""
        d2 = self.derivative(2)[1:-1]
        scale = np.max(np.abs(d2)) or 1.0
        d2 = np.where(np.abs(d2) < 1e-10 * scale, 0.0, d2)
        nz = np.flatnonzero(d2)
        flips = nz[:-1][np.sign(d2[nz[:-1]]) != np.sign(d2[nz[1:]])]
        return self.grid.y_nodes[1:-1][flips]


@dataclass(frozen=True, eq=False)
class EvolvedBase:
    profile_at_t: ShearProfile
    time: float
    shear_vorticity: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.profile_at_t.values


# ---------------------------------------------------------------------------
# families


def erf_selfsimilar(grid: Grid, far_field: float = 1.0, t0: float = 1.0) -> ShearProfile:
    """U(z) = far_field * erf(z / (2 sqrt(t0))), the heat kernel's own profile."""
    if t0 <= 0:
        raise ConfigError("t0 must be positive")

    def exact(z, order, _t0=t0):
        return far_field * _erf_derivative(z, _t0, order)

    return ShearProfile(exact(grid.y_nodes, 0), grid, f"erf(t0={t0:g})", float(far_field),
                        "erf_selfsimilar", {"far_field": far_field, "t0": t0}, exact)


def _erf_derivative(z, t, order):
    w = 2.0 * np.sqrt(t)
    g = 2.0 / np.sqrt(np.pi) * np.exp(-(z / w) ** 2) / w
    if order == 0:
        return erf(z / w)
    if order == 1:
        return g
    if order == 2:
        return -2.0 * z / w ** 2 * g
    raise ValueError("derivative order must be 0, 1 or 2")


def wall_jet(grid: Grid, amplitude: float = 1.0) -> ShearProfile:
    """U(z) = amplitude * z e^{1-z}: inflected, vanishing at the wall and at infinity."""

    def exact(z, order):
        e = amplitude * np.exp(1.0 - z)
        if order == 0:
            return z * e
        if order == 1:
            return (1.0 - z) * e
        if order == 2:
            return (z - 2.0) * e
        raise ValueError("derivative order must be 0, 1 or 2")

    return ShearProfile(exact(grid.y_nodes, 0), grid, "wall_jet", 0.0, "wall_jet",
                        {"amplitude": amplitude}, exact)


def tanh_shifted(grid: Grid, a: float = 0.0, b: float = 1.0, amplitude: float = 1.0,
                 steepness: float = 1.0, shift: float = 0.0) -> ShearProfile:
    """U(z) = (A/2)[tanh(s(z - h)) + tanh(s(z + h))] + a z exp(-b z^2).

    With A = s = 1 and h = 0 this is tanh(z) + a z exp(-b z^2).  A positive
    shift h lifts the shear layer off the wall, which makes it strongly
    unstable.  The profile is odd in z, so every even derivative vanishes at
    the wall and the Dirichlet heat evolution stays smooth there.
    """
    A, s, h = amplitude, steepness, shift
    if s <= 0 or b <= 0:
        raise ConfigError("steepness and b must be positive")

    def exact(z, order):
        bump = np.exp(-b * z ** 2)
        out = 0.0
        for sign in (-1.0, 1.0):
            th = np.tanh(s * (z + sign * h))
            sech2 = 1.0 - th ** 2
            if order == 0:
                out = out + 0.5 * A * th
            elif order == 1:
                out = out + 0.5 * A * s * sech2
            elif order == 2:
                out = out - A * s ** 2 * th * sech2
            else:
                raise ValueError("derivative order must be 0, 1 or 2")
        if order == 0:
            return out + a * z * bump
        if order == 1:
            return out + a * (1.0 - 2.0 * b * z ** 2) * bump
        return out + a * (4.0 * b ** 2 * z ** 3 - 6.0 * b * z) * bump

    return ShearProfile(exact(grid.y_nodes, 0), grid, "tanh_shifted", float(A),
                        "tanh_shifted",
                        {"a": a, "b": b, "amplitude": A, "steepness": s, "shift": h}, exact)


def from_function(grid: Grid, func: Callable[[np.ndarray], np.ndarray], label: str,
                  far_field: float) -> ShearProfile:
    """Profile from any vectorised callable (derivatives taken spectrally)."""
    return ShearProfile(np.asarray(func(grid.y_nodes), dtype=float), grid, label,
                        float(far_field))


def load_table(path, grid: Grid, label: str | None = None) -> ShearProfile:
    """Two-column text table (z, U) with one header line.

    Values are interpolated monotonically; beyond the table the last value is
    held, and that value becomes the far field.
    """
    path = Path(path)
    try:
        data = np.loadtxt(path, skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read profile table {path}: {exc}") from exc
    if data.shape[1] != 2 or data.shape[0] < 4:
        raise ConfigError("profile table needs two columns and at least four rows")
    z, u = data[:, 0], data[:, 1]
    if np.any(np.diff(z) <= 0) or z[0] != 0.0:
        raise ConfigError("table z must start at 0 and increase strictly")
    interp = PchipInterpolator(z, u, extrapolate=False)
    y = grid.y_nodes
    vals = np.where(y <= z[-1], interp(np.minimum(y, z[-1])), u[-1])
    return ShearProfile(vals, grid, label or path.stem, float(u[-1]), "custom_table",
                        {"path": str(path)})


def make_profile(grid: Grid, family: str, **params) -> ShearProfile:
    """Dispatch on a family name, as used by configuration files."""
    if family == "erf_selfsimilar":
        return erf_selfsimilar(grid, **params)
    if family == "wall_jet":
        return wall_jet(grid, **params)
    if family == "tanh_shifted":
        return tanh_shifted(grid, **params)
    if family == "custom_table":
        return load_table(params.pop("path"), grid, **params)
    if family == "exp_monotone":
        far = params.get("far_field", 1.0)
        return from_function(grid, lambda z: far * (1.0 - np.exp(-z)), "exp_monotone", far)
    raise ConfigError(f"unknown profile family {family!r}")


# ---------------------------------------------------------------------------
# heat evolution


def _heat_propagator(grid: Grid):
    """Eigen-decomposition of the interior Dirichlet second-derivative matrix."""
    key = "heat_eig"
    cache = grid._cache
    if key not in cache:
        D2i = grid.D2[1:-1, 1:-1]
        lam, V = np.linalg.eig(D2i)
        if np.max(np.abs(lam.imag)) > 1e-8 * np.max(np.abs(lam)) or np.max(lam.real) >= 0:
            cache[key] = None
        else:
            cache[key] = (lam.real, V.real, np.linalg.inv(V.real))
    return cache[key]


def _heat_numeric(profile: ShearProfile, t: float) -> np.ndarray:
    g = profile.grid
    ramp = profile.far_field * g.y_nodes / g.y_max
    w = profile.values - ramp
    prop = _heat_propagator(g)
    out = np.zeros(g.n_y)
    if prop is None:
        out[1:-1] = sla.expm(t * g.D2[1:-1, 1:-1]) @ w[1:-1]
    else:
        lam, V, Vinv = prop
        out[1:-1] = V @ (np.exp(lam * t) * (Vinv @ w[1:-1]))
    return out + ramp


def evolve_heat(U: ShearProfile, t: float) -> EvolvedBase:
    """U_s(t, .) with U_s(t, 0) = 0 and the far-field value held at y_max."""
    t = float(t)
    if t < 0 or not np.isfinite(t):
        raise ValueError(f"heat time must be non-negative, got {t}")
    if t == 0.0:
        prof = U
    elif U.analytic_family == "erf_selfsimilar":
        prof = erf_selfsimilar(U.grid, U.params["far_field"], U.params["t0"] + t)
    else:
        vals = _heat_numeric(U, t)
        vals[0] = 0.0
        prof = ShearProfile(vals, U.grid, f"{U.label}@t={t:g}", U.far_field,
                            U.analytic_family, dict(U.params, heat_time=t))
    return EvolvedBase(prof, t, -prof.derivative(1))


def s_coefficient(U: ShearProfile, t: float, nu: float, order: int = 1):
    """A = nu^{-1/2}(U_s(sqrt(nu) t) - U) and its y-derivatives up to ``order``."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    n = U.grid.n_y
    if t == 0:
        return tuple(np.zeros(n) for _ in range(order + 1))
    rs = np.sqrt(nu)
    ev = evolve_heat(U, rs * t).profile_at_t
    out = []
    for k in range(order + 1):
        if U.analytic_family == "erf_selfsimilar":
            diff = ev.derivative(k) - U.derivative(k)
        else:
            gap = ev.values - U.values
            diff = gap if k == 0 else (U.grid.D1 if k == 1 else U.grid.D2) @ gap
        out.append(diff / rs)
    return tuple(out)


def apply_s(v: VelocityField, U: ShearProfile, t: float, nu: float) -> VelocityField:
    """S v = (A d_x v1 + v2 A', A d_x v2) for the y-only coefficient A."""
    if not v.grid.same_y(U.grid):
        raise GridError("velocity and profile live on different y-grids")
    A, dA = s_coefficient(U, t, nu, 1)
    return VelocityField(Field(v.grid, v.u.dx().data * A + v.v.data * dA),
                         Field(v.grid, v.v.dx().data * A))


def apply_s_vorticity(omega: Field, v2: Field, U: ShearProfile, t: float, nu: float) -> Field:
    """Scalar curl of S v: A d_x omega - v2 A''."""
    A, _, d2A = s_coefficient(U, t, nu, 2)
    return Field(omega.grid, omega.dx().data * A - v2.data * d2A)
