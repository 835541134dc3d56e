"""Rayleigh eigenproblem, the growing mode u_e^0 and linearised Euler steps.

Eigenpairs solve ``(U - c)(psi'' - alpha^2 psi) = U'' psi`` with
``psi(0) = psi(y_max) = 0``.  Vorticity follows the curl convention
``omega = d_x v - d_y u = -Laplacian(psi)``, under which the linearised Euler
equation about U at x-wavenumber beta reads

    d_t omega = -i beta U omega - i beta U'' psi + curl R.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from .baseflow import ShearProfile
from .errors import AmplitudeOverflow, CFLViolation, GridError, InvalidWavenumber, NoUnstableMode
from .spectral import (Field, Grid, VelocityField, discrete_norm, stream_from_vorticity)

__all__ = [
    "EigenMode", "LinEulerState", "rayleigh_spectrum", "max_growth_mode",
    "refine_alpha", "growing_mode_field", "growing_mode_stream", "step_linearized_euler",
    "linearized_euler_rhs", "stable_dt", "dump_spectrum",
]

CONVERGENCE_TOL = 1e-6
TAIL_TOL = 1e-6
UNSTABLE_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class EigenMode:
    """One Rayleigh eigenpair; ``psi_profile`` has unit L2 norm in y and a
    real positive wall derivative."""
    alpha: float
    c: complex
    psi_profile: np.ndarray
    grid: Grid
    residual: float
    convergence: float = 0.0
    profile: Optional[ShearProfile] = field(default=None, repr=False)

    @property
    def lam(self) -> complex:
        return -1j * self.alpha * self.c

    @property
    def growth_rate(self) -> float:
        return float(self.alpha * self.c.imag)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.alpha

    def x_grid(self, n_x: int = 8) -> Grid:
        return self.grid.with_x(n_x, self.period)

    @property
    def psi(self) -> Field:
        """Complex single-mode stream function psi_e(y) e^{i alpha x}."""
        return Field.from_profile(self.x_grid(), 1, self.psi_profile, real=False)

    @cached_property
    def omega_profile(self) -> np.ndarray:
        """Vorticity -(psi'' - alpha^2 psi), taken from the Rayleigh equation
        as -U'' psi / (U - c) to avoid differentiating the eigenvector."""
        if self.profile is None:
            return -(self.grid.D2 @ self.psi_profile - self.alpha ** 2 * self.psi_profile)
        U = self.profile.on_grid(self.grid)
        return -U.derivative(2) * self.psi_profile / (U.values - self.c)

    @cached_property
    def _constants(self) -> dict:
        return {}

    def growth_constants(self, kind="Linf") -> tuple[float, float]:
        """(c0, c1) with c0 <= ||Re(u_e e^{i theta})||_kind <= c1 for every phase."""
        key = str(kind)
        if key not in self._constants:
            vals = []
            for theta in np.linspace(0.0, 2.0 * np.pi, 9)[:-1]:
                v = _mode_velocity(self, np.exp(1j * theta), self.x_grid(8))
                vals.append(discrete_norm(v, kind, oversample=8))
            self._constants[key] = (min(vals), max(vals))
        return self._constants[key]


@dataclass(frozen=True, eq=False)
class LinEulerState:
    """Perturbation vorticity (all x-modes of one grid) and its stream function."""
    time: float
    omega: Field
    psi: Field

    @classmethod
    def from_vorticity(cls, omega: Field, time: float = 0.0) -> "LinEulerState":
        return cls(time, omega, stream_from_vorticity(omega))

    @classmethod
    def from_mode(cls, mode: EigenMode, amplitude: complex = 1.0, n_x: int = 8,
                  real: bool = True) -> "LinEulerState":
        g = mode.x_grid(n_x)
        return cls.from_vorticity(Field.from_profile(g, 1, amplitude * mode.omega_profile,
                                                     real=real))

    def velocity(self) -> VelocityField:
        return VelocityField.from_stream(self.psi)


# ---------------------------------------------------------------------------
# eigenproblem


def _pencil(U: ShearProfile, alpha: float):
    g = U.grid
    n = g.n_y
    B = g.D2 - alpha ** 2 * np.eye(n)
    A = U.values[:, None] * B - np.diag(U.derivative(2))
    return A[1:-1, 1:-1], B[1:-1, 1:-1]


def _raw_spectrum(U: ShearProfile, alpha: float, vectors: bool):
    A, B = _pencil(U, alpha)
    if vectors:
        c, V = sla.eig(A, B)
    else:
        c, V = sla.eig(A, B, right=False), None
    ok = np.isfinite(c)
    return c[ok], (V[:, ok] if vectors else None)


def _normalise(grid: Grid, psi_int: np.ndarray) -> np.ndarray:
    psi = np.zeros(grid.n_y, complex)
    psi[1:-1] = psi_int
    nrm = np.sqrt(np.sum(np.abs(psi) ** 2 * grid.weights))
    psi /= nrm
    d0 = grid.D1[0] @ psi
    if abs(d0) > 0:
        psi *= np.conj(d0) / abs(d0)
    return psi


def _rayleigh_residual(U: ShearProfile, alpha: float, c: complex, psi: np.ndarray) -> float:
    g = U.grid
    r = (U.values - c) * (g.D2 @ psi - alpha ** 2 * psi) - U.derivative(2) * psi
    r[[0, -1]] = 0.0
    return float(np.sqrt(np.sum(np.abs(r) ** 2 * g.weights)))


def rayleigh_spectrum(U: ShearProfile, alpha: float, grid: Grid | None = None,
                      tol: float = CONVERGENCE_TOL, tail_tol: float = TAIL_TOL,
                      filter_spurious: bool = True) -> list[EigenMode]:
    """Converged discrete eigenpairs of the collocated Rayleigh equation.

    A mode survives the filter when its phase speed moves by less than
    ``tol`` on a grid with twice the nodes and its normalised eigenfunction is
    below ``tail_tol`` over the outer tenth of the domain.  Modes are sorted
    by decreasing Im c.
    """
    alpha = float(alpha)
    if not alpha > 0 or not np.isfinite(alpha):
        raise InvalidWavenumber(f"alpha must be positive, got {alpha}")
    if grid is not None:
        U = U.on_grid(grid)
    g = U.grid
    c, V = _raw_spectrum(U, alpha, vectors=True)
    if filter_spurious:
        fine = U.on_grid(g.refined(2))
        c_fine, _ = _raw_spectrum(fine, alpha, vectors=False)
    outer = g.y_nodes >= 0.9 * g.y_max
    modes = []
    for i in np.argsort(-c.imag):
        conv = 0.0
        if filter_spurious:
            if c_fine.size == 0:
                continue
            conv = float(np.min(np.abs(c_fine - c[i])))
            if conv >= tol:
                continue
        psi = _normalise(g, V[:, i])
        if filter_spurious and np.max(np.abs(psi[outer])) >= tail_tol:
            continue
        res = _rayleigh_residual(U, alpha, c[i], psi)
        modes.append(EigenMode(alpha, complex(c[i]), psi, g, res, conv, U))
    return modes


def _best_unstable(modes: list[EigenMode]) -> Optional[EigenMode]:
    unstable = [m for m in modes if m.c.imag > UNSTABLE_TOL]
    return max(unstable, key=lambda m: m.c.imag) if unstable else None


def max_growth_mode(U: ShearProfile, alpha_grid: Iterable[float], grid: Grid | None = None,
                    **kw) -> EigenMode:
    """Mode maximising alpha * Im c over the scan; ties go to the smaller alpha."""
    alphas = sorted(float(a) for a in alpha_grid)
    if not alphas:
        raise ValueError("alpha_grid must be nonempty")
    best = None
    for a in alphas:
        m = _best_unstable(rayleigh_spectrum(U, a, grid, **kw))
        if m is not None and (best is None or m.growth_rate > best.growth_rate + 1e-12):
            best = m
    if best is None:
        raise NoUnstableMode(f"no unstable Rayleigh mode for {U.label} over alpha in "
                             f"[{alphas[0]:g}, {alphas[-1]:g}]")
    return best


def scan_growth(U: ShearProfile, alpha_grid: Iterable[float], grid: Grid | None = None,
                **kw) -> list[tuple[float, float]]:
    """(alpha, max Re lambda) pairs; stable wavenumbers report 0."""
    out = []
    for a in alpha_grid:
        m = _best_unstable(rayleigh_spectrum(U, a, grid, **kw))
        out.append((float(a), m.growth_rate if m else 0.0))
    return out


def refine_alpha(U: ShearProfile, lo: float, hi: float, grid: Grid | None = None,
                 xtol: float = 1e-4) -> EigenMode:
    """Locate the most unstable wavenumber inside [lo, hi] by bounded search."""

    def neg_growth(a):
        m = _best_unstable(rayleigh_spectrum(U, a, grid))
        return -(m.growth_rate if m else 0.0)

    res = minimize_scalar(neg_growth, bounds=(lo, hi), method="bounded",
                          options={"xatol": xtol})
    return max_growth_mode(U, [res.x], grid)


# ---------------------------------------------------------------------------
# growing mode


def _mode_velocity(mode: EigenMode, factor: complex, grid: Grid) -> VelocityField:
    if not grid.same_y(mode.grid):
        raise GridError("growing-mode grid must share the eigenmode's y-nodes")
    k = int(round(mode.alpha / grid.alpha0))
    if k < 1 or not np.isclose(k * grid.alpha0, mode.alpha, rtol=1e-12):
        raise GridError("grid period must be a multiple of the mode's wavelength")
    psi = factor * mode.psi_profile
    u = Field.from_profile(grid, k, mode.grid.D1 @ psi)
    v = Field.from_profile(grid, k, -1j * mode.alpha * psi)
    return VelocityField(u, v)


def _amplitude(mode: EigenMode, N: int, nu: float, t: float) -> complex:
    amp = nu ** N * np.exp(mode.growth_rate * t)
    if amp > 1.0:
        raise AmplitudeOverflow(f"nu^N e^(Re lambda t) = {amp:.3e} exceeds 1")
    return nu ** N * np.exp(mode.lam * t)


def growing_mode_field(m: EigenMode, N: int, nu: float, t: float,
                       grid: Grid | None = None) -> VelocityField:
    """u_e^0 = nu^N Re(grad^perp(psi_e e^{i alpha x}) e^{lambda t})."""
    if m.growth_rate <= 0:
        raise NoUnstableMode("growing_mode_field needs Re lambda > 0")
    return _mode_velocity(m, _amplitude(m, N, nu, t), grid or m.x_grid())


def growing_mode_stream(m: EigenMode, N: int, nu: float, t: float,
                        grid: Grid | None = None) -> Field:
    grid = grid or m.x_grid()
    k = int(round(m.alpha / grid.alpha0))
    return Field.from_profile(grid, k, _amplitude(m, N, nu, t) * m.psi_profile)


# ---------------------------------------------------------------------------
# linearised Euler


def linearized_euler_rhs(omega: Field, psi: Field, U: np.ndarray, U2: np.ndarray) -> np.ndarray:
    """-i k U omega - i k U'' psi for every x-mode (no source)."""
    ik = 1j * omega.grid.wavenumbers[:, None]
    return -ik * (U[None, :] * omega.data + U2[None, :] * psi.data)


def stable_dt(U: ShearProfile, grid: Grid, lam: complex = 0.0) -> float:
    """Default step 0.5 / (beta_max max|U| + |lambda|)."""
    beta = grid.alpha0 * max(1, int(np.max(np.abs(grid.k_int))))
    return 0.5 / (beta * np.max(np.abs(U.values)) + abs(lam) + 1e-300)


SourceLike = Union[None, Field, Callable[[float], Field]]


def _source_at(source: SourceLike, t: float, grid: Grid) -> np.ndarray:
    if source is None:
        return np.zeros(grid.shape, complex)
    f = source(t) if callable(source) else source
    if not f.grid.compatible(grid):
        raise GridError("source lives on an incompatible grid")
    return f.data


def step_linearized_euler(state: LinEulerState, U: ShearProfile, beta: float | None,
                          source: SourceLike, dt: float) -> LinEulerState:
    """One classical RK4 step of the vorticity form of linearised Euler.

    ``source`` is curl R as a Field (or a callable of time); ``beta`` is the
    fundamental x-wavenumber of the state's grid.
    """
    g = state.omega.grid
    if beta is not None and not np.isclose(beta, g.alpha0, rtol=1e-12):
        raise GridError(f"beta={beta} differs from the grid wavenumber {g.alpha0}")
    if not g.same_y(U.grid):
        raise GridError("profile and state use different y-grids")
    if not dt > 0:
        raise ValueError("dt must be positive")
    kmax = g.alpha0 * max(np.max(np.abs(g.k_int)), 0)
    if dt * kmax * np.max(np.abs(U.values)) > 1.0 + 1e-12:
        raise CFLViolation(f"dt={dt:g} violates dt*beta*max|U| <= 1")
    Uv, U2 = U.values, U.derivative(2)
    t0 = state.time

    def f(t, w):
        om = Field(g, w)
        return linearized_euler_rhs(om, stream_from_vorticity(om), Uv, U2) + _source_at(source, t, g)

    w = state.omega.data
    k1 = f(t0, w)
    k2 = f(t0 + dt / 2, w + dt / 2 * k1)
    k3 = f(t0 + dt / 2, w + dt / 2 * k2)
    k4 = f(t0 + dt, w + dt * k3)
    w_new = w + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return LinEulerState.from_vorticity(Field(g, w_new), t0 + dt)


def dump_spectrum(modes: list[EigenMode], path) -> Path:
    """Text table of (alpha, Re c, Im c, Re lambda, residual) per mode."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [(m.alpha, m.c.real, m.c.imag, m.growth_rate, m.residual) for m in modes]
    np.savetxt(path, np.array(rows).reshape(-1, 5), fmt="%.12e",
               header="alpha re_c im_c re_lambda residual")
    return path
