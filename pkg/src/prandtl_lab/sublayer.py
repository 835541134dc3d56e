"""Viscous sublayer, assembled approximate solution and its residual.

The large-scale flow ``u_L = U_s + u_e^app + u~_e`` satisfies only u.n = 0 at
the wall.  Its slip is removed by Stokes correctors on the nu^{1/4} scale:

    d_t v^1 + grad p = sqrt(nu) Laplacian v^1,   v^1 = -u_L on the wall,
    d_t v^k + grad p = sqrt(nu) Laplacian v^k - Q_k,   v^k = 0 on the wall,
    Q_k = u_L . grad v^{k-1} + v^{k-1} . grad u_L + sum_{j+l=k} v^j . grad v^l.

Everything is advanced in vorticity form with the no-slip influence-matrix
integrator; the sum over j + l = k is symmetric, so its curl is
``sum v^j . grad omega^l``.  Leaving out the last linear term and the
products with j + l > M gives the momentum residual of the sum

    R = u_L . grad v^M + v^M . grad u_L + sum_{j+l>M, j,l<=M} v^j . grad v^l,

which is evaluated from this formula and cross-checked against the full
vorticity operator applied to the assembled field.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .baseflow import ShearProfile, evolve_heat
from .cascade import (CascadeConfig, CascadeTerm, CorrectorTrajectory, Trajectory,
                      _Kinematics, inviscid_vorticity)
from .errors import GridError, TraceError
from .spectral import (Field, Grid, VelocityField, advection, discrete_norm,
                       interpolate_y, stream_from_vorticity, sup_over_x)
from .timestepping import VorticityIMEX

__all__ = [
    "WallTrace", "SublayerTerm", "LargeScaleFlow", "ApproxSolution", "ResidualReport",
    "solve_stokes_layer", "build_sublayer_cascade", "assemble_approx", "nsapp_residual",
    "residual_series", "collapse_profiles", "dump_collapse_csv", "dump_residual_csv",
    "SUBLAYER_MIN_NODES",
]

SUBLAYER_MIN_NODES = 12
NORMAL_TRACE_TOL = 1e-8
SLIP_TOL = 1e-8
SLIP_FAIL = 1e-6
ROUTE_CHECK_ETA = 2.0


def sublayer_scale(nu: float) -> float:
    return float(nu) ** 0.25


def _check_sublayer_grid(grid: Grid, nu: float) -> None:
    n = grid.nodes_below(sublayer_scale(nu))
    if n < SUBLAYER_MIN_NODES:
        raise GridError(f"only {n} nodes below nu^(1/4) = {sublayer_scale(nu):.3g}; "
                        f"the sublayer needs {SUBLAYER_MIN_NODES}")


def _uniform_step(times: np.ndarray) -> float:
    dt = np.diff(times)
    if dt.size == 0 or not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise ValueError("time mesh must be uniform with at least two samples")
    return float(dt[0])


# ---------------------------------------------------------------------------
# wall data


@dataclass(frozen=True, eq=False)
class WallTrace:
    """Wall velocity per x-mode on a time mesh, shape (n_t, n_x)."""
    times: np.ndarray
    tangential: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        tan = np.asarray(self.tangential, dtype=complex)
        nor = np.asarray(self.normal, dtype=complex)
        if tan.ndim != 2 or tan.shape != nor.shape or tan.shape[0] != t.size:
            raise ValueError("trace arrays must be (n_t, n_x) and aligned with the times")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "tangential", tan)
        object.__setattr__(self, "normal", nor)

    @classmethod
    def from_function(cls, times, n_x: int, func: Callable[[float], np.ndarray]) -> "WallTrace":
        times = np.asarray(times, dtype=float)
        tan = np.array([np.broadcast_to(np.asarray(func(t), complex), (n_x,)) for t in times])
        return cls(times, tan, np.zeros_like(tan))

    @cached_property
    def _spline(self):
        return CubicSpline(self.times, self.tangential, axis=0)

    def __call__(self, t: float) -> np.ndarray:
        i = np.searchsorted(self.times, t)
        slack = 1e-9 * max(1.0, abs(self.times[-1]))
        for j in (i - 1, i):
            if 0 <= j < self.times.size and abs(self.times[j] - t) <= slack:
                return self.tangential[j]
        return self._spline(t)

    def __neg__(self) -> "WallTrace":
        return WallTrace(self.times, -self.tangential, -self.normal)

    @property
    def max_normal(self) -> float:
        return float(np.max(np.abs(self.normal))) if self.normal.size else 0.0


# ---------------------------------------------------------------------------
# Stokes correctors


@dataclass(eq=False)
class SublayerTerm:
    """v_S^k stored through its vorticity samples."""
    k: int
    trajectory: Trajectory
    trace: Optional[WallTrace] = None

    @property
    def grid(self) -> Grid:
        return self.trajectory.grid

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    def vorticity(self, t: float) -> Field:
        return Field(self.grid, self.trajectory.at(t))

    def vorticity_rate(self, t: float) -> Field:
        return Field(self.grid, self.trajectory.rate(t))

    def stream(self, t: float) -> Field:
        return stream_from_vorticity(self.vorticity(t))

    def velocity(self, t: float) -> VelocityField:
        return VelocityField.from_stream(self.stream(t))

    def wall_velocity(self, t: float) -> np.ndarray:
        """Tangential wall velocity per x-mode."""
        return self.velocity(t).u.data[:, 0]

    def magnitude(self, t: float) -> np.ndarray:
        """sup over x of |v| at every y-node."""
        return sup_over_x(self.velocity(t))


def _stokes_march(grid: Grid, kappa: float, times: np.ndarray,
                  slip: Optional[Callable[[float], np.ndarray]],
                  explicit: Optional[Callable[[float, np.ndarray], np.ndarray]]) -> Trajectory:
    dt = _uniform_step(times)
    stepper = VorticityIMEX(grid, kappa, dt, wall="noslip", u_top=0.0)
    w = np.zeros(grid.shape, complex)
    samples = np.empty((times.size,) + grid.shape, complex)
    samples[0] = w
    for n in range(times.size - 1):
        w = stepper.step(w, times[n], explicit, slip)
        samples[n + 1] = w
    return Trajectory(grid, times, samples)


def solve_stokes_layer(trace: WallTrace, nu: float, grid: Grid,
                       t_mesh: Optional[np.ndarray] = None) -> SublayerTerm:
    """v_S^1: unsteady Stokes flow with tangential wall data ``trace``.

    Zero initial data; the wall data switch on at t = 0.  For the mean mode
    the pressure drops out and this is the heat equation for u with Dirichlet
    data.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    if trace.max_normal > NORMAL_TRACE_TOL:
        raise TraceError(f"normal wall velocity {trace.max_normal:.3g} must vanish")
    if trace.tangential.shape[1] != grid.n_x:
        raise GridError("trace and grid disagree on the number of x-modes")
    times = trace.times if t_mesh is None else np.asarray(t_mesh, dtype=float)
    traj = _stokes_march(grid, np.sqrt(nu), times, trace, None)
    return SublayerTerm(1, traj, trace)


# ---------------------------------------------------------------------------
# large-scale flow u_L


class LargeScaleFlow:
    """u_L = U_s(sqrt(nu) t) + u_e^app + u~_e on the cascade grid and mesh."""

    def __init__(self, base: ShearProfile, terms: Sequence[CascadeTerm], cfg: CascadeConfig,
                 corrector: Optional[CorrectorTrajectory] = None):
        self.terms = list(terms)
        self.cfg = cfg
        self.corrector = corrector
        self.grid = self.terms[0].grid
        self.times = self.terms[0].times
        self.base = base.on_grid(self.grid)
        if corrector is not None:
            if not corrector.grid.compatible(self.grid):
                raise GridError("corrector and cascade grids differ")
            if corrector.times.size != self.times.size or not np.allclose(
                    corrector.times, self.times, rtol=0, atol=1e-12):
                raise ValueError("corrector and cascade time meshes differ")

    @property
    def mode(self):
        return self.terms[0].mode

    def shear(self, t: float) -> ShearProfile:
        return evolve_heat(self.base, self.cfg.kappa * t).profile_at_t

    def vorticity(self, t: float) -> np.ndarray:
        """Vorticity data of u_e^app + u~_e (U_s excluded)."""
        out = inviscid_vorticity(self.terms, self.cfg, t)
        if self.corrector is not None:
            out = out + self.corrector.at(t)
        return out

    def vorticity_rate(self, t: float) -> np.ndarray:
        out = np.zeros(self.grid.shape, complex)
        for term in self.terms:
            out += self.cfg.weight(term.j) * term.vorticity_rate(t).data
        if self.corrector is not None:
            out += self.corrector.rate(t)
        return out

    def kinematics(self, t: float) -> _Kinematics:
        return _Kinematics(self.grid, self.vorticity(t))

    def wall_trace(self) -> WallTrace:
        """Wall velocity of u_e^app + u~_e at every sample time (U_s(0) = 0)."""
        tan, nor = [], []
        for t in self.times:
            psi = stream_from_vorticity(Field(self.grid, self.vorticity(t)))
            tan.append(psi.dy().data[:, 0])
            nor.append(-psi.dx().data[:, 0])
        return WallTrace(self.times, np.array(tan), np.array(nor))


def _with_shear(kin: _Kinematics, Us: ShearProfile) -> _Kinematics:
    """Copy of ``kin`` with U_s added to u and -U_s' to omega (mean mode)."""
    g = kin.grid
    i0 = g.mode_index(0)
    out = object.__new__(_Kinematics)
    out.grid = g
    out.psi = kin.psi
    out.v = kin.v
    out.wx = kin.wx
    u = kin.u.data.copy()
    u[i0] += Us.values
    out.u = Field(g, u)
    om = kin.omega.data.copy()
    om[i0] -= Us.derivative(1)
    out.omega = Field(g, om)
    wy = kin.wy.data.copy()
    wy[i0] -= Us.derivative(2)
    out.wy = Field(g, wy)
    return out


def _q_curl(large: _Kinematics, prev: _Kinematics,
            pairs: Sequence[tuple[_Kinematics, _Kinematics]]) -> np.ndarray:
    """curl Q = u_L . grad omega_prev + v_prev . grad omega_L + sum v^j . grad omega^l."""
    out = (large.advect(prev) + prev.advect(large)).data
    for a, b in pairs:
        out = out + a.advect(b).data
    return out


def build_sublayer_cascade(large: LargeScaleFlow, M: int,
                           nu: Optional[float] = None) -> list[SublayerTerm]:
    """v_S^1 .. v_S^M on the large-scale grid and time mesh."""
    if int(M) != M or M < 1:
        raise ValueError("M must be a positive integer")
    nu = large.cfg.nu if nu is None else float(nu)
    g = large.grid
    _check_sublayer_grid(g, nu)
    terms = [solve_stokes_layer(-large.wall_trace(), nu, g)]
    kappa = np.sqrt(nu)
    for k in range(2, M + 1):
        lower = list(terms)

        def explicit(t, w, lower=lower, k=k):
            lk = _with_shear(large.kinematics(t), large.shear(t))
            kins = {j: _Kinematics(g, lower[j - 1].vorticity(t).data) for j in range(1, k)}
            pairs = [(kins[j], kins[k - j]) for j in range(1, k)]
            return -_q_curl(lk, kins[k - 1], pairs)

        traj = _stokes_march(g, kappa, large.times, None, explicit)
        terms.append(SublayerTerm(k, traj, None))
    return terms


# ---------------------------------------------------------------------------
# assembled approximate solution


@dataclass(eq=False)
class ApproxSolution:
    """u^app = U_s + u_e^app + u~_e + sum_k v_S^k."""
    large: LargeScaleFlow
    sublayer: list[SublayerTerm]
    cfg: CascadeConfig
    residual: Optional["ResidualReport"] = None
    bound_fit: dict = field(default_factory=dict)

    @property
    def base(self) -> ShearProfile:
        return self.large.base

    @property
    def grid(self) -> Grid:
        return self.large.grid

    @property
    def times(self) -> np.ndarray:
        return self.large.times

    @property
    def growth_rate(self) -> float:
        return self.large.mode.growth_rate

    def envelope(self, t):
        return self.cfg.envelope(self.growth_rate, t)

    def vorticity(self, t: float) -> np.ndarray:
        """Vorticity data of u^app - U_s."""
        out = self.large.vorticity(t)
        for term in self.sublayer:
            out = out + term.vorticity(t).data
        return out

    def velocity(self, t: float) -> VelocityField:
        """u^app - U_s."""
        return VelocityField.from_stream(stream_from_vorticity(Field(self.grid, self.vorticity(t))))

    def wall_slip(self, t: float) -> float:
        u, v = self.velocity(t).wall_values()
        return float(max(np.max(np.abs(u)), np.max(np.abs(v))))

    def divergence(self, t: float) -> float:
        return float(np.max(np.abs(self.velocity(t).divergence().data)))

    def perturbation_sup(self, t: float) -> float:
        """||u^app - U_s||_inf."""
        return float(np.max(self.velocity(t).physical_magnitude(max(32, 4 * self.grid.n_x))))


def _sample_times(times: np.ndarray, n: int) -> np.ndarray:
    idx = np.unique(np.linspace(1, times.size - 1, min(n, times.size - 1)).astype(int))
    return times[idx]


def assemble_approx(base: ShearProfile, cascade: Sequence[CascadeTerm],
                    corrector: Optional[CorrectorTrajectory],
                    sublayer_terms: Sequence[SublayerTerm], cfg: CascadeConfig,
                    n_check: int = 40) -> ApproxSolution:
    """Sum the components and check no-slip and incompressibility.

    The wall data switch on at t = 0 (impulsive start of v_S^1), so the
    no-slip check covers the sample times t > 0.
    """
    large = LargeScaleFlow(base, cascade, cfg, corrector)
    for term in sublayer_terms:
        if not term.grid.compatible(large.grid):
            raise GridError("sublayer and large-scale grids differ")
        if term.times.size != large.times.size or not np.allclose(
                term.times, large.times, rtol=0, atol=1e-12):
            raise ValueError("sublayer and large-scale time meshes differ")
    approx = ApproxSolution(large, list(sublayer_terms), cfg)
    if not sublayer_terms:
        return approx
    times = _sample_times(large.times, n_check)
    slip = np.array([approx.wall_slip(t) for t in times])
    if slip.max() > SLIP_FAIL:
        raise TraceError(f"wall slip {slip.max():.3g} of u^app: boundary data are inconsistent")
    env = approx.envelope(times)
    sup = np.array([approx.perturbation_sup(t) for t in times])
    y = approx.grid.y_nodes
    lim = y <= 1.0
    C_y = 0.0
    for t, e in zip(times, env):
        v2 = sup_over_x(approx.velocity(t).v)
        C_y = max(C_y, float(np.max(v2[lim][1:] / (e * y[lim][1:]))))
    approx.bound_fit.update({
        "wall_slip_max": float(slip.max()),
        "divergence_max": float(max(approx.divergence(t) for t in times[:: max(1, len(times) // 5)])),
        "c2_lower": float(np.min(sup / env)),
        "c2_upper": float(np.max(sup / env)),
        "C_uapp_y": C_y,
    })
    return approx


# ---------------------------------------------------------------------------
# residual


@dataclass(frozen=True, eq=False)
class ResidualReport:
    t: float
    momentum: VelocityField
    curl: Field
    operator_curl: Field
    linf: float
    curl_linf: float
    route_mismatch: float
    profile: np.ndarray
    beta: float
    beta_r2: float
    mass_fraction: float
    tail_ratios: dict
    lower_bound_ratio: float

    def as_row(self) -> dict:
        return {"t": self.t, "Linf_residual": self.linf, "beta_fit": self.beta,
                "beta_r2": self.beta_r2, "mass_fraction": self.mass_fraction,
                "lower_bound_ratio": self.lower_bound_ratio,
                "route_mismatch": self.route_mismatch}


def _localization(grid: Grid, profile: np.ndarray, nu: float, eta_max: float = 10.0):
    """Exponential fit in eta = y / nu^{1/4} and the L1 mass below eta_max."""
    d = sublayer_scale(nu)
    eta = grid.y_nodes / d
    total = float(profile @ grid.weights)
    if total <= 0:
        return 0.0, 0.0, 1.0, {}
    cumulative = grid.integration_matrix @ profile
    below = float(interpolate_y(grid, cumulative, [min(eta_max * d, grid.y_max)])[0])
    peak = int(np.argmax(profile))
    sel = (eta >= eta[peak]) & (eta <= eta_max) & (profile > 0)
    beta, r2 = 0.0, 0.0
    if np.count_nonzero(sel) >= 3:
        x, yv = eta[sel], np.log(profile[sel])
        slope, icpt = np.polyfit(x, yv, 1)
        resid = yv - (slope * x + icpt)
        ss = float(np.sum((yv - yv.mean()) ** 2))
        beta = float(-slope)
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    sup = float(profile.max())
    tails = {}
    for K in (2, 4, 8):
        m = eta >= K
        tails[K] = float(profile[m].max() / sup) if np.any(m) and sup > 0 else 0.0
    return beta, r2, below / total, tails


def _operator_curl(approx: ApproxSolution, t: float) -> np.ndarray:
    """d_t w + U_s d_x w - w_2 U_s'' + w . grad w - kappa Laplacian w for
    the perturbation w = u^app - U_s; the heat equation of U_s cancels."""
    g = approx.grid
    Us = approx.large.shear(t)
    rate = approx.large.vorticity_rate(t)
    for term in approx.sublayer:
        rate = rate + term.vorticity_rate(t).data
    kin = _Kinematics(g, approx.vorticity(t))
    ik = 1j * g.wavenumbers[:, None]
    out = rate + ik * Us.values * kin.omega.data - kin.v.data * Us.derivative(2)
    out = out + kin.advect(kin).data - approx.cfg.kappa * kin.omega.laplacian().data
    return out


def nsapp_residual(approx: ApproxSolution, t: float) -> ResidualReport:
    """Momentum residual R_S^app at time t with localisation diagnostics."""
    times = approx.times
    if t < times[0] - 1e-12 or t > times[-1] * (1 + 1e-9):
        raise ValueError(f"t={t} outside the sampled range")
    g = approx.grid
    M = len(approx.sublayer)
    Us = approx.large.shear(t)
    lk = approx.large.kinematics(t)
    lkin = _with_shear(lk, Us)
    uL = VelocityField(lkin.u, lkin.v)
    vel = [term.velocity(t) for term in approx.sublayer]
    kins = [_Kinematics(g, term.vorticity(t).data) for term in approx.sublayer]
    if M == 0:
        mom = VelocityField.zeros(g)
        curl = Field.zeros(g)
    else:
        vM = vel[-1]
        mom = advection(uL, vM) + advection(vM, uL)
        curl = Field(g, _q_curl(lkin, kins[-1], []))
        for j in range(1, M + 1):
            for l in range(1, M + 1):
                if j + l > M:
                    mom = mom + advection(vel[j - 1], vel[l - 1])
                    curl = curl + kins[j - 1].advect(kins[l - 1])
    op = Field(g, _operator_curl(approx, t))
    n_phys = max(32, 4 * g.n_x)
    prof = sup_over_x(mom, n_phys // g.n_x if g.n_x else 4)
    nu = approx.cfg.nu
    beta, r2, frac, tails = _localization(g, prof, nu)
    linf = float(prof.max())
    cl = float(np.max(np.abs(curl.physical(n_phys))))
    # the spline time derivative is not the IMEX stage derivative inside the
    # impulsively started Stokes layer, so the routes are compared above it
    above = g.y_nodes >= ROUTE_CHECK_ETA * sublayer_scale(nu)
    cl_above = float(np.max(np.abs(curl.physical(n_phys)[:, above])))
    diff = float(np.max(np.abs((op - curl).physical(n_phys)[:, above])))
    mismatch = diff / cl_above if cl_above > 0 else 0.0
    env = float(approx.envelope(t))
    lower = approx.perturbation_sup(t) / env if env > 0 else np.inf
    return ResidualReport(float(t), mom, curl, op, linf, cl, mismatch, prof, beta, r2,
                          frac, tails, float(lower))


def residual_series(approx: ApproxSolution, times: Sequence[float]) -> dict:
    """Residual reports on several times and the fitted amplitude exponent P
    in ||R||_inf ~ C (nu^N e^{Re lambda t})^P."""
    reports = [nsapp_residual(approx, t) for t in times]
    env = approx.envelope(np.asarray(times, dtype=float))
    lin = np.array([r.linf for r in reports])
    ok = lin > 0
    P, C = np.nan, np.nan
    if np.count_nonzero(ok) >= 2:
        P, logC = np.polyfit(np.log(env[ok]), np.log(lin[ok]), 1)
        C = float(np.exp(logC))
    return {"reports": reports, "P": float(P), "C": C, "envelope": env}


# ---------------------------------------------------------------------------
# self-similarity and CSV output


def collapse_profiles(terms_by_nu: dict, t: float, eta_max: float = 10.0,
                      n_eta: int = 201) -> tuple[np.ndarray, dict, float]:
    """|v_S^1| against eta = y / nu^{1/4}, each normalised by its maximum.

    Returns (eta, profiles per nu, max pairwise sup-norm mismatch).
    """
    eta = np.linspace(0.0, eta_max, n_eta)
    profiles = {}
    for nu, term in terms_by_nu.items():
        g = term.grid
        y = eta * sublayer_scale(nu)
        if y[-1] > g.y_max:
            raise GridError("eta range exceeds the truncated domain")
        mag = term.magnitude(t)
        p = interpolate_y(g, mag, y)
        profiles[nu] = p / np.max(np.abs(p))
    keys = list(profiles)
    worst = 0.0
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            worst = max(worst, float(np.max(np.abs(profiles[keys[i]] - profiles[keys[j]]))))
    return eta, profiles, worst


def dump_collapse_csv(eta: np.ndarray, profiles: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu", "eta", "abs_vS1"])
        for nu, p in profiles.items():
            for e, v in zip(eta, p):
                w.writerow([f"{nu:.6g}", f"{e:.8g}", f"{float(np.real(v)):.10e}"])
    return path


def dump_residual_csv(series: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "Linf_residual", "beta_fit", "P_fit", "lower_bound_ratio"])
        for r in series["reports"]:
            w.writerow([f"{r.t:.10g}", f"{r.linf:.10e}", f"{r.beta:.6g}",
                        f"{series['P']:.6g}", f"{r.lower_bound_ratio:.6g}"])
    return path
