"""Inviscid cascade u_e^app, its residual E_e^app and the large-scale corrector.

The expansion is ``u_e^app = nu^N sum_{j=0}^M nu^{j/2} u^j`` with
``u^0 = Re(u_e e^{lambda t})`` and, for j >= 1, zero-data solutions of

    d_t u^j + U . grad u^j + u^j . grad U + grad p = R_j,
    R_j = -S u^{j-1} + Laplacian u^{j-1} - sum_{k+l+2N=j} u^k . grad u^l.

Plugging u_e^app into the perturbation equation about U_s leaves

    E = nu^{N+(M+1)/2} (S u^M - Laplacian u^M)
        + sum_{(k,l) not used in any R_j} nu^{2N+(k+l)/2} u^k . grad u^l.

Everything is advanced in vorticity form; for a symmetric index set the
nonlinear curls reduce to ``sum u^k . grad omega^l``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .baseflow import ShearProfile, apply_s, evolve_heat, s_coefficient
from .errors import ConfigError, GridError
from .rayleigh import EigenMode, stable_dt
from .spectral import (Field, Grid, VelocityField, discrete_norm, product,
                       stream_from_vorticity)
from .timestepping import VorticityIMEX

__all__ = [
    "CascadeConfig", "Trajectory", "CascadeTerm", "CorrectorState", "CorrectorTrajectory",
    "source_pairs", "residual_pairs", "critical_time", "build_cascade", "euler_residual",
    "inviscid_vorticity", "solve_corrector", "verify_growth_bounds", "dump_cascade_csv",
    "fit_growth",
]

AMPLITUDE_GUARD = 1e-2


@dataclass(frozen=True)
class CascadeConfig:
    N: int
    M: int
    nu: float
    t_max: float = float("inf")
    include_zero_order: bool = True

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError("N must be a positive integer")
        if int(self.M) != self.M or self.M < 1:
            raise ConfigError("M must be a positive integer")
        if not 0 < self.nu < 1:
            raise ConfigError("nu must lie in (0, 1)")
        if self.nu ** self.N > AMPLITUDE_GUARD * (1 + 1e-12):
            raise ConfigError(f"nu^N = {self.nu ** self.N:.3g} is outside the asymptotic regime")
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive")

    @property
    def P(self) -> float:
        return 1.0 + (self.M + 1) / (2.0 * self.N)

    @property
    def kappa(self) -> float:
        return float(np.sqrt(self.nu))

    def weight(self, j: int) -> float:
        """Prefactor nu^{N + j/2} of u^j in u_e^app."""
        return self.nu ** (self.N + 0.5 * j)

    def envelope(self, growth_rate: float, t):
        return self.nu ** self.N * np.exp(growth_rate * np.asarray(t))


def source_pairs(j: int, N: int, include_zero_order: bool = True) -> list[tuple[int, int]]:
    """Ordered pairs (k, l) with k + l + 2N = j feeding R_j."""
    lo = 0 if include_zero_order else 1
    return [(k, j - 2 * N - k) for k in range(lo, j - 2 * N - lo + 1)
            if j - 2 * N - k >= lo]


def residual_pairs(M: int, N: int, include_zero_order: bool = True) -> list[tuple[int, int]]:
    """Ordered pairs (k, l), 0 <= k, l <= M, whose products are left in E."""
    used = {p for j in range(1, M + 1) for p in source_pairs(j, N, include_zero_order)}
    return [(k, l) for k in range(M + 1) for l in range(M + 1) if (k, l) not in used]


def critical_time(cfg: CascadeConfig, theta: float, lam: complex) -> float:
    """T*_theta = -(N - theta) log(nu) / Re(lambda)."""
    if not 0 <= theta <= cfg.N:
        raise ValueError(f"theta must lie in [0, N={cfg.N}]")
    rate = complex(lam).real
    if rate <= 0:
        raise ValueError("Re lambda must be positive")
    return -(cfg.N - theta) * np.log(cfg.nu) / rate


# ---------------------------------------------------------------------------
# trajectories


class Trajectory:
    """Vorticity samples on a time mesh with cubic interpolation in time."""

    def __init__(self, grid: Grid, times, data):
        self.grid = grid
        self.times = np.asarray(times, dtype=float)
        self.data = np.asarray(data)
        if self.data.shape[0] != self.times.size:
            raise ValueError("times and samples are misaligned")

    @cached_property
    def _spline(self):
        if self.times.size < 2:
            return None
        return CubicSpline(self.times, self.data, axis=0)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> np.ndarray:
        t0, t1 = self.times[0], self.times[-1]
        slack = 1e-9 * max(1.0, abs(t1))
        if t < t0 - slack or t > t1 + slack:
            raise ValueError(f"t={t} outside the sampled range [{t0}, {t1}]")
        i = np.searchsorted(self.times, t)
        if i < self.times.size and abs(self.times[i] - t) <= slack:
            return self.data[i]
        if i > 0 and abs(self.times[i - 1] - t) <= slack:
            return self.data[i - 1]
        return self._spline(min(max(t, t0), t1))

    def rate(self, t: float) -> np.ndarray:
        """Time derivative of the cubic interpolant."""
        t0, t1 = self.times[0], self.times[-1]
        slack = 1e-9 * max(1.0, abs(t1))
        if t < t0 - slack or t > t1 + slack:
            raise ValueError(f"t={t} outside the sampled range [{t0}, {t1}]")
        if self._spline is None:
            return np.zeros_like(self.data[0])
        return self._spline(min(max(t, t0), t1), 1)


@dataclass(eq=False)
class CascadeTerm:
    """u^j stored through its vorticity; j = 0 is evaluated exactly."""
    j: int
    trajectory: Trajectory
    mode: EigenMode
    growth_fit: Optional[tuple[float, float]] = None

    @property
    def grid(self) -> Grid:
        return self.trajectory.grid

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    def vorticity(self, t: float) -> Field:
        if self.j == 0:
            return Field(self.grid, _mode_vorticity(self.mode, self.grid, t))
        return Field(self.grid, self.trajectory.at(t))

    def vorticity_rate(self, t: float) -> Field:
        """d/dt of the vorticity (exact for j = 0, spline derivative otherwise)."""
        if self.j == 0:
            return Field(self.grid, _mode_vorticity(self.mode, self.grid, t, rate=True))
        return Field(self.grid, self.trajectory.rate(t))

    def stream(self, t: float) -> Field:
        return stream_from_vorticity(self.vorticity(t))

    def velocity(self, t: float) -> VelocityField:
        return VelocityField.from_stream(self.stream(t))

    @cached_property
    def norms(self) -> dict[str, np.ndarray]:
        out = {"L2": [], "H2": [], "Linf": []}
        for t in self.times:
            v = self.velocity(t)
            for k in out:
                out[k].append(discrete_norm(v, k))
        return {k: np.array(v) for k, v in out.items()}


def _mode_index(mode: EigenMode, grid: Grid) -> int:
    if not grid.same_y(mode.grid):
        raise GridError("cascade grid must share the eigenmode's y-nodes")
    k = int(round(mode.alpha / grid.alpha0))
    if k < 1 or not np.isclose(k * grid.alpha0, mode.alpha, rtol=1e-12):
        raise GridError("grid period must be a multiple of the mode's wavelength")
    return k


def _mode_vorticity(mode: EigenMode, grid: Grid, t: float, rate: bool = False) -> np.ndarray:
    k = _mode_index(mode, grid)
    amp = np.exp(mode.lam * t) * (mode.lam if rate else 1.0)
    return Field.from_profile(grid, k, amp * mode.omega_profile).data


class _Kinematics:
    """Stream function, velocity and vorticity gradient of one vorticity array."""

    def __init__(self, grid: Grid, omega: np.ndarray):
        self.grid = grid
        self.omega = Field(grid, omega)
        self.psi = stream_from_vorticity(self.omega)
        self.u = self.psi.dy()
        self.v = -self.psi.dx()
        self.wx = self.omega.dx()
        self.wy = self.omega.dy()

    def advect(self, other: "_Kinematics") -> Field:
        """self.velocity . grad(other.omega)."""
        return product(self.u, other.wx) + product(self.v, other.wy)


def _curl_s(kin: _Kinematics, A: np.ndarray, d2A: np.ndarray) -> np.ndarray:
    return kin.wx.data * A - kin.v.data * d2A


def build_cascade(mode: EigenMode, cfg: CascadeConfig, base: ShearProfile,
                  grid: Grid | None = None, n_x: int | None = None,
                  dt: float | None = None, filter_order: int | None = 16) -> list[CascadeTerm]:
    """Integrate u^1..u^M together with classical RK4 up to min(t_max, T*).

    Samples are stored at every step; the mesh is uniform.  Each source is
    passed through an exponential Chebyshev filter of ``filter_order``
    (None disables it): the sources contain up to 2M derivatives of the
    eigenmode, whose truncation tail would otherwise pile up at the wall
    node, where inviscid transport leaves the vorticity unconstrained.
    """
    if mode.growth_rate <= 0:
        raise ValueError("cascade needs an unstable mode")
    if grid is None:
        kmax = cfg.M // (2 * cfg.N) + 1
        grid = mode.grid.with_x(n_x or max(8, 2 * kmax + 2), mode.period)
    _mode_index(mode, grid)
    U = base.on_grid(grid)
    Uv, U2 = U.values, U.derivative(2)
    ik = 1j * grid.wavenumbers[:, None]
    t_end = min(cfg.t_max, critical_time(cfg, 0.0, mode.lam))
    dt0 = dt or stable_dt(U, grid, mode.lam)
    n_steps = max(1, int(np.ceil(t_end / dt0 - 1e-9)))
    dt = t_end / n_steps
    pairs = {j: source_pairs(j, cfg.N, cfg.include_zero_order) for j in range(1, cfg.M + 1)}
    M = cfg.M
    F = None if filter_order is None else grid.filter_matrix(filter_order).T

    def rhs(t, W):
        A, _, d2A = s_coefficient(U, t, cfg.nu, 2)
        kin = [_Kinematics(grid, _mode_vorticity(mode, grid, t))]
        kin += [_Kinematics(grid, W[j]) for j in range(M)]
        out = np.empty_like(W)
        for j in range(1, M + 1):
            prev = kin[j - 1]
            src = -_curl_s(prev, A, d2A) + prev.omega.laplacian().data
            for k, l in pairs[j]:
                src -= kin[k].advect(kin[l]).data
            if F is not None:
                src = src @ F
            cur = kin[j]
            out[j - 1] = -ik * (Uv * cur.omega.data + U2 * cur.psi.data) + src
        return out

    W = np.zeros((M,) + grid.shape, complex)
    samples = np.empty((n_steps + 1, M) + grid.shape, complex)
    samples[0] = W
    t = 0.0
    for n in range(n_steps):
        k1 = rhs(t, W)
        k2 = rhs(t + dt / 2, W + dt / 2 * k1)
        k3 = rhs(t + dt / 2, W + dt / 2 * k2)
        k4 = rhs(t + dt, W + dt * k3)
        W = W + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (n + 1) * dt
        samples[n + 1] = W
    times = dt * np.arange(n_steps + 1)
    terms = [CascadeTerm(0, Trajectory(grid, times, np.zeros((times.size, 0))), mode)]
    for j in range(1, M + 1):
        terms.append(CascadeTerm(j, Trajectory(grid, times, samples[:, j - 1].copy()), mode))
    for term in terms:
        term.growth_fit = _default_fit(term, mode.growth_rate)
    return terms


def _default_fit(term: CascadeTerm, rate: float):
    try:
        r = fit_growth(term.times, term.norms["L2"], (2.0 / rate, 4.0 / rate))
    except ValueError:
        return None
    return r


def fit_growth(times, values, window: tuple[float, float]) -> tuple[float, float]:
    """Least-squares (rate, constant) of log(values) = log(constant) + rate t."""
    times = np.asarray(times)
    values = np.asarray(values)
    sel = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12) & (values > 0)
    if np.count_nonzero(sel) < 3:
        raise ValueError("insufficient samples in the fit window")
    rate, logc = np.polyfit(times[sel], np.log(values[sel]), 1)
    return float(rate), float(np.exp(logc))


# ---------------------------------------------------------------------------
# residual and assembled large-scale field


def inviscid_vorticity(terms: Sequence[CascadeTerm], cfg: CascadeConfig, t: float) -> np.ndarray:
    """Vorticity data of u_e^app at time t."""
    out = np.zeros(terms[0].grid.shape, complex)
    for term in terms:
        out += cfg.weight(term.j) * term.vorticity(t).data
    return out


def euler_residual(terms: Sequence[CascadeTerm], cfg: CascadeConfig, base: ShearProfile,
                   t: float) -> tuple[VelocityField, Field]:
    """E_e^app at time t in momentum form together with its curl."""
    if len(terms) != cfg.M + 1 or [tm.j for tm in terms] != list(range(cfg.M + 1)):
        raise ValueError("terms must be complete through order M")
    g = terms[0].grid
    if t < 0 or t > terms[-1].trajectory.t_end * (1 + 1e-9):
        raise ValueError(f"t={t} outside the sampled range")
    U = base.on_grid(g)
    A, _, d2A = s_coefficient(U, t, cfg.nu, 2)
    kin = [_Kinematics(g, terms[j].vorticity(t).data) for j in range(cfg.M + 1)]
    vel = [VelocityField(k.u, k.v) for k in kin]
    top = kin[cfg.M]
    w_lin = cfg.nu ** (cfg.N + 0.5 * (cfg.M + 1))
    E = (apply_s(vel[cfg.M], U, t, cfg.nu) - vel[cfg.M].laplacian()) * w_lin
    curl = Field(g, _curl_s(top, A, d2A) - top.omega.laplacian().data) * w_lin
    for k, l in residual_pairs(cfg.M, cfg.N, cfg.include_zero_order):
        w = cfg.nu ** (2 * cfg.N + 0.5 * (k + l))
        a, b = kin[k], kin[l]
        E = E + VelocityField(product(a.u, b.u.dx()) + product(a.v, b.u.dy()),
                              product(a.u, b.v.dx()) + product(a.v, b.v.dy())) * w
        curl = curl + a.advect(b) * w
    return E, curl


# ---------------------------------------------------------------------------
# large-scale corrector


@dataclass(frozen=True, eq=False)
class CorrectorState:
    field: VelocityField
    vorticity: Field
    time: float


class CorrectorTrajectory(Trajectory):
    def state(self, t: float) -> CorrectorState:
        om = Field(self.grid, self.at(t))
        return CorrectorState(VelocityField.from_stream(stream_from_vorticity(om)), om, t)


def solve_corrector(terms: Sequence[CascadeTerm], cfg: CascadeConfig, base: ShearProfile,
                    dt: float | None = None, forcing_scale: float = 1.0) -> CorrectorTrajectory:
    """Vorticity form of the corrector with omega = 0 at the wall.

    The transport velocity u_L contains the corrector itself; it is treated
    in the explicit part of each IMEX stage.  ``forcing_scale = 0`` switches
    the residual forcing off.
    """
    g = terms[0].grid
    times = terms[0].times
    if dt is None:
        dt = times[1] - times[0]
    t_end = times[-1]
    n_steps = max(1, int(round(t_end / dt)))
    dt = t_end / n_steps
    U = base.on_grid(g)
    kappa = cfg.kappa
    stepper = VorticityIMEX(g, kappa, dt, wall="navier", u_top=0.0)
    ik = 1j * g.wavenumbers[:, None]

    def explicit(t, w):
        Us = evolve_heat(U, kappa * t).profile_at_t
        Uv, U2 = Us.values, Us.derivative(2)
        cor = _Kinematics(g, w)
        app = _Kinematics(g, inviscid_vorticity(terms, cfg, t))
        out = -ik * (Uv * cor.omega.data + U2 * cor.psi.data)
        out -= (app.advect(cor) + cor.advect(cor) + cor.advect(app)).data
        if forcing_scale:
            out -= forcing_scale * euler_residual(terms, cfg, base, t)[1].data
        return out

    w = np.zeros(g.shape, complex)
    samples = np.empty((n_steps + 1,) + g.shape, complex)
    samples[0] = w
    for n in range(n_steps):
        w = stepper.step(w, n * dt, explicit)
        samples[n + 1] = w
    return CorrectorTrajectory(g, dt * np.arange(n_steps + 1), samples)


# ---------------------------------------------------------------------------
# reports


def verify_growth_bounds(terms: Sequence[CascadeTerm], N: int,
                         window: tuple[float, float] | None = None,
                         kinds: Sequence[str] = ("L2", "H2", "Linf")) -> list[dict]:
    """Fit log||u^j|| against t and compare with (1 + j/(2N)) Re lambda."""
    rate = terms[0].mode.growth_rate
    window = window or (2.0 / rate, 4.0 / rate)
    rows = []
    for term in terms:
        target = (1.0 + term.j / (2.0 * N)) * rate
        for kind in kinds:
            r, c = fit_growth(term.times, term.norms[kind], window)
            rows.append({"j": term.j, "norm": kind, "rate": r, "constant": c,
                         "target": target, "rel_err": abs(r - target) / target})
    return rows


def dump_cascade_csv(terms: Sequence[CascadeTerm], path) -> Path:
    """Per-term norm time series with columns t, j, L2, H2, Linf."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "j", "L2", "H2", "Linf"])
        for term in terms:
            n = term.norms
            for i, t in enumerate(term.times):
                w.writerow([f"{t:.10g}", term.j, f"{n['L2'][i]:.10e}",
                            f"{n['H2'][i]:.10e}", f"{n['Linf'][i]:.10e}"])
    return path
