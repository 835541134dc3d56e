"""Shooting solver for the Rayleigh equation, independent of the collocation.

The equation ``psi'' = (alpha^2 + U''/(U - c)) psi`` is integrated from the
wall (psi = 0, psi' = 1) and inward from a far point where
``psi ~ exp(-alpha y)``; an eigenvalue zeroes the Wronskian of the two
solutions at an interior matching point.  Only U and U'' as callables are
used, so the result can serve as an oracle for ``rayleigh_spectrum``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidWavenumber, NoUnstableMode

__all__ = ["ShootingResult", "wronskian", "shoot_eigenvalue"]


@dataclass(frozen=True)
class ShootingResult:
    alpha: float
    c: complex
    iterations: int
    wronskian: float


def _integrate(U, U2, alpha, c, y0, y1, state, rtol):
    def rhs(y, s):
        q = alpha ** 2 + U2(y) / (U(y) - c)
        return [s[1], q * s[0]]

    sol = solve_ivp(rhs, (y0, y1), np.asarray(state, complex), method="DOP853",
                    rtol=rtol, atol=rtol * 1e-3)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:, -1]


def wronskian(U: Callable, U2: Callable, alpha: float, c: complex, y_match: float,
              y_far: float, rtol: float = 1e-12) -> complex:
    """Normalised Wronskian of the wall and far-field solutions at y_match."""
    a = _integrate(U, U2, alpha, c, 0.0, y_match, [0.0, 1.0], rtol)
    b = _integrate(U, U2, alpha, c, y_far, y_match, [1.0, -alpha], rtol)
    return (a[0] * b[1] - a[1] * b[0]) / (np.hypot(*np.abs(a)) * np.hypot(*np.abs(b)))


def shoot_eigenvalue(U: Callable, U2: Callable, alpha: float, y_far: float,
                     y_match: float = 2.0, guess: Optional[complex] = None,
                     c_real_range: tuple[float, float] = (0.0, 1.0),
                     c_imag_max: float = 0.5, search: int = 24, tol: float = 1e-12,
                     max_iter: int = 60) -> ShootingResult:
    """Unstable eigenvalue c by secant iteration on the Wronskian.

    Without ``guess`` the iteration is seeded from the minimum of |W| on a
    coarse search lattice in the upper half plane.
    """
    if not alpha > 0:
        raise InvalidWavenumber("alpha must be positive")
    W = lambda c: wronskian(U, U2, alpha, c, y_match, y_far, rtol=1e-10 if guess is None else 1e-12)
    if guess is None:
        cr = np.linspace(*c_real_range, search)
        ci = np.linspace(c_imag_max / search, c_imag_max, search)
        best, best_val = None, np.inf
        for r in cr:
            for i in ci:
                val = abs(W(r + 1j * i))
                if val < best_val:
                    best, best_val = r + 1j * i, val
        guess = best
    W = lambda c: wronskian(U, U2, alpha, c, y_match, y_far)
    c0, c1 = complex(guess), complex(guess) * (1 + 1e-4) + 1e-5j
    f0, f1 = W(c0), W(c1)
    for it in range(1, max_iter + 1):
        if f1 == f0:
            break
        c2 = c1 - f1 * (c1 - c0) / (f1 - f0)
        c0, f0 = c1, f1
        c1, f1 = c2, W(c2)
        if abs(c1 - c0) < tol * max(1.0, abs(c1)):
            break
    if c1.imag <= 0 or not np.isfinite(c1):
        raise NoUnstableMode(f"shooting converged to a non-growing c={c1}")
    return ShootingResult(float(alpha), complex(c1), it, float(abs(f1)))
