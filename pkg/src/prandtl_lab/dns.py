"""Nonlinear Navier-Stokes solver on the periodic half-strip and the
instability experiment built on it.

The vorticity equation ``d_t omega + u . grad omega = kappa Laplacian omega
+ curl f`` (kappa = sqrt(nu) in scaled variables) is advanced with the IMEX
integrator of ``timestepping``.  A state either carries the full flow or,
when a base profile is attached, the deviation w = u - U_s(kappa t) from the
heat-evolved shear; the shear itself is then exact and only

    d_t omega_w = kappa Laplacian omega_w - U_s d_x omega_w + w_2 U_s''
                  - w . grad omega_w + curl f

is integrated.  No-slip for w is exact because U_s(t, 0) = 0.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .baseflow import ShearProfile, evolve_heat
from .cascade import _Kinematics, critical_time, CascadeConfig
from .errors import BlowUp, CFLViolation, GridError
from .spectral import (Field, Grid, VelocityField, discrete_norm, interpolate_y, regrid,
                       stream_from_vorticity, sup_over_x)
from .timestepping import VorticityIMEX

__all__ = [
    "NO_SLIP", "NAVIER_SLIP", "FlowState", "InstabilityRecord", "Verdict", "step_ns",
    "march", "run_instability_experiment", "sublayer_rescale", "rescaled_profile",
    "x_modulation_ratio", "classify_dichotomy", "save_checkpoint", "load_checkpoint",
    "dump_record_csv", "BLOWUP_GUARD",
]

NO_SLIP = "NoSlip"
NAVIER_SLIP = "NavierSlip"
_WALL = {NO_SLIP: "noslip", NAVIER_SLIP: "navier"}
BLOWUP_GUARD = 1e6
CHECKPOINT_VERSION = 1

Forcing = Union[None, Field, VelocityField, Callable[[float], Union[Field, VelocityField]]]


@dataclass(frozen=True, eq=False)
class FlowState:
    """Vorticity state; with ``base`` set it is the deviation from U_s."""
    time: float
    vorticity: Field
    bc: str
    nu_eff: float
    base: Optional[ShearProfile] = None
    u_top: float = 0.0

    def __post_init__(self):
        if self.bc not in _WALL:
            raise ValueError(f"bc must be one of {tuple(_WALL)}")
        if self.nu_eff < 0:
            raise ValueError("nu_eff must be non-negative")
        if self.base is not None and not self.base.grid.same_y(self.vorticity.grid):
            raise GridError("base profile and state live on different y-grids")

    @property
    def grid(self) -> Grid:
        return self.vorticity.grid

    @cached_property
    def stream(self) -> Field:
        return stream_from_vorticity(self.vorticity, self.u_top)

    @cached_property
    def velocity(self) -> VelocityField:
        return VelocityField.from_stream(self.stream)

    def shear(self) -> Optional[ShearProfile]:
        if self.base is None:
            return None
        return evolve_heat(self.base, self.nu_eff * self.time).profile_at_t

    def with_vorticity(self, omega: Field, time: float) -> "FlowState":
        return FlowState(float(time), omega, self.bc, self.nu_eff, self.base, self.u_top)

    def deviation_sup(self, oversample: int = 4) -> float:
        """||u - U_s||_inf (the full velocity when no base is attached)."""
        return float(np.max(sup_over_x(self.velocity, oversample)))

    def invariants(self) -> dict:
        """Divergence, stream consistency and wall-condition residuals."""
        vel = self.velocity
        u0, v0 = vel.wall_values()
        omega_back = -self.stream.laplacian().data[:, 1:-1]
        out = {
            "divergence": float(np.max(np.abs(vel.divergence().data))),
            "stream_consistency": float(np.max(np.abs(omega_back - self.vorticity.data[:, 1:-1]))),
            "normal_wall": float(np.max(np.abs(v0))),
        }
        if self.bc == NO_SLIP:
            out["tangential_wall"] = float(np.max(np.abs(u0)))
        else:
            out["wall_vorticity"] = float(np.max(np.abs(self.vorticity.data[:, 0])))
        return out

    def energy(self) -> float:
        return 0.5 * discrete_norm(self.velocity, "L2") ** 2


def _stepper(grid: Grid, kappa: float, dt: float, bc: str, u_top: float) -> VorticityIMEX:
    key = ("imex", float(kappa), float(dt), bc, float(u_top))
    cache = grid._cache
    if key not in cache:
        cache[key] = VorticityIMEX(grid, kappa, dt, wall=_WALL[bc], u_top=u_top)
    return cache[key]


def _forcing_curl(forcing: Forcing, t: float, grid: Grid) -> Optional[np.ndarray]:
    if forcing is None:
        return None
    f = forcing(t) if callable(forcing) else forcing
    if isinstance(f, VelocityField):
        f = f.curl()
    if not f.grid.compatible(grid):
        raise GridError("forcing lives on a different grid")
    return f.data


def _explicit(state: FlowState, forcing: Forcing):
    g = state.grid
    ik = 1j * g.wavenumbers[:, None]
    base = state.base
    kappa = state.nu_eff

    def rhs(t, w):
        kin = _Kinematics(g, w)
        if state.u_top:
            kin.u.data[g.mode_index(0)] += state.u_top
        out = -kin.advect(kin).data
        if base is not None:
            Us = evolve_heat(base, kappa * t).profile_at_t
            out += -ik * Us.values * w + kin.v.data * Us.derivative(2)
        fc = _forcing_curl(forcing, t, g)
        if fc is not None:
            out += fc
        return out

    return rhs


def _check_cfl(state: FlowState, dt: float) -> None:
    g = state.grid
    kmax = float(np.max(np.abs(g.wavenumbers[g.retained]))) if g.n_x > 1 else 0.0
    umax = state.deviation_sup(2) + abs(state.u_top)
    if state.base is not None:
        umax += float(np.max(np.abs(state.base.values)))
    if dt * kmax * umax > 1.0:
        raise CFLViolation(f"dt={dt:g} exceeds the advective limit {1.0 / (kmax * umax):.3g}")


def step_ns(state: FlowState, dt: float, forcing: Forcing = None,
            check_cfl: bool = True) -> FlowState:
    """One ARS(4,4,3) step: explicit advection, implicit diffusion."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if check_cfl:
        _check_cfl(state, dt)
    stepper = _stepper(state.grid, state.nu_eff, dt, state.bc, state.u_top)
    w = stepper.step(state.vorticity.data, state.time, _explicit(state, forcing))
    if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > BLOWUP_GUARD:
        raise BlowUp(f"vorticity exceeded {BLOWUP_GUARD:g} at t={state.time + dt:.6g}")
    return state.with_vorticity(Field(state.grid, w), state.time + dt)


def march(state: FlowState, dt: float, n_steps: int, forcing: Forcing = None,
          callback: Optional[Callable[[FlowState], None]] = None) -> FlowState:
    """Repeated ``step_ns``; the CFL check runs on the initial state only."""
    _check_cfl(state, dt)
    if callback is not None:
        callback(state)
    for _ in range(int(n_steps)):
        state = step_ns(state, dt, forcing, check_cfl=False)
        if callback is not None:
            callback(state)
    return state


# ---------------------------------------------------------------------------
# instability record and dichotomy


@dataclass(eq=False)
class InstabilityRecord:
    """Norm time series of one experiment."""
    times: np.ndarray
    v_inf: np.ndarray
    u_minus_Us_inf: np.ndarray
    uapp_minus_Us_inf: np.ndarray
    seeded_amplitude: float
    nu: float
    N: int
    lam: complex
    beta_exponent: float = 1.0
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for name in ("v_inf", "u_minus_Us_inf", "uapp_minus_Us_inf"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.times.shape:
                raise ValueError(f"{name} is not aligned with the times")
            if np.any(arr < 0):
                raise ValueError(f"{name} must be nonnegative")
            setattr(self, name, arr)

    @property
    def envelope_params(self) -> tuple[int, complex, float]:
        return self.N, self.lam, self.beta_exponent

    @property
    def growth_rate(self) -> float:
        return float(np.real(self.lam))

    def amplitude(self, t=None):
        t = self.times if t is None else np.asarray(t)
        return self.seeded_amplitude * np.exp(self.growth_rate * t)

    def critical_time(self, theta: float) -> float:
        return -(self.N - theta) * np.log(self.nu) / self.growth_rate

    def crossing_time(self, level: float, series: str = "u_minus_Us_inf") -> float:
        """First time the series reaches ``level`` (linear interpolation)."""
        y = getattr(self, series)
        above = np.flatnonzero(y >= level)
        if above.size == 0:
            return float("nan")
        i = int(above[0])
        if i == 0:
            return float(self.times[0])
        t0, t1, y0, y1 = self.times[i - 1], self.times[i], y[i - 1], y[i]
        return float(t0 + (t1 - t0) * (np.log(level) - np.log(y0)) / (np.log(y1) - np.log(y0)))

    def fitted_rate(self, window: tuple[float, float], series: str = "u_minus_Us_inf") -> float:
        y = getattr(self, series)
        sel = (self.times >= window[0] - 1e-12) & (self.times <= window[1] + 1e-12) & (y > 0)
        if np.count_nonzero(sel) < 3:
            raise ValueError("insufficient samples in the fit window")
        return float(np.polyfit(self.times[sel], np.log(y[sel]), 1)[0])


@dataclass(frozen=True)
class Verdict:
    outcome: str
    sigma0: float
    crossing_time: float
    prandtl_margin: float
    sublayer_margin: float

    PRANDTL = "PrandtlUnstable"
    SUBLAYER = "SublayerUnstable"
    INCONCLUSIVE = "Inconclusive"


def classify_dichotomy(rec: InstabilityRecord, beta: float, tau: float) -> Verdict:
    """Decide which branch of the dichotomy the record exhibits.

    PrandtlUnstable: ||v|| stays strictly below (nu^N e^{Re lambda t})^{1+beta}
    on the whole record, and sigma0 is the minimum of ||u^app - U_s|| - ||v||
    over the final window (the last tau before the end of the record).
    SublayerUnstable: ||v|| strictly exceeds the envelope before T*_{1/4}.
    Otherwise Inconclusive.  Margins are min log(env / ||v||) over the record
    and max log(||v|| / env) before T*_{1/4}.
    """
    t = rec.times
    env = rec.amplitude(t) ** (1.0 + beta)
    v = rec.v_inf
    with np.errstate(divide="ignore"):
        log_ratio = np.log(env) - np.log(np.where(v > 0, v, np.finfo(float).tiny))
    prandtl_margin = float(np.min(log_ratio))
    t_quarter = rec.critical_time(0.25)
    early = t <= t_quarter
    sub_margin = float(np.max(-log_ratio[early])) if np.any(early) else float("-inf")
    final = t >= t[-1] - tau
    sigma0 = float(np.min(rec.uapp_minus_Us_inf[final] - v[final]))
    if np.all(v < env):
        return Verdict(Verdict.PRANDTL, sigma0, float("nan"), prandtl_margin, sub_margin)
    escaped = np.flatnonzero((v > env) & early)
    if escaped.size:
        return Verdict(Verdict.SUBLAYER, sigma0, float(t[escaped[0]]), prandtl_margin, sub_margin)
    return Verdict(Verdict.INCONCLUSIVE, sigma0, float("nan"), prandtl_margin, sub_margin)


# ---------------------------------------------------------------------------
# experiment driver


def _approx_deviation(approx, grid: Grid, t: float) -> Field:
    return regrid(Field(approx.grid, approx.vorticity(t)), grid)


def run_instability_experiment(cfg, approx=None, progress: Optional[Callable] = None
                               ) -> InstabilityRecord:
    """March the DNS from u^app(0) (or from v_S^1(0) with R_S^app forcing)
    and record ||v||, ||u - U_s|| and ||u^app - U_s|| on the approximate
    solution's time mesh up to T*_0 - tau.

    ``cfg`` is an ``ExperimentConfig``; ``approx`` may be passed to reuse a
    prebuilt approximate solution.
    """
    from .pipeline import build_approximation

    if approx is None:
        approx = build_approximation(cfg).approx
    ccfg: CascadeConfig = approx.cfg
    rate = approx.growth_rate
    lam = approx.large.mode.lam
    tau = cfg.dichotomy.tau_factor / rate
    t_max = float("inf") if cfg.dns.t_max is None else cfg.dns.t_max
    times = approx.times
    flags = []
    if t_max < critical_time(ccfg, 0.25, lam):
        flags.append("window not reached")
    t_stop = min(t_max, critical_time(ccfg, 0.0, lam) - tau, times[-1])
    dt_app = times[1] - times[0]
    stride = max(1, int(round(cfg.dns.dt / dt_app))) if cfg.dns.dt else 1
    dt = stride * dt_app
    n_x = cfg.dns.n_x or approx.grid.n_x
    if n_x < approx.grid.n_x:
        raise GridError("DNS needs at least the x-resolution of the approximate solution")
    grid = approx.grid.with_x(n_x)
    base = approx.base.on_grid(grid)
    forcing = None
    if cfg.seed == "PerturbPrandtl":
        w0 = _approx_deviation(approx, grid, 0.0)
    else:
        w0 = regrid(approx.sublayer[0].vorticity(0.0), grid) if approx.sublayer else Field.zeros(grid)
        forcing = _residual_forcing(approx, grid)
        flags.append("forced sublayer branch")
    state = FlowState(0.0, w0, cfg.dns.bc, ccfg.kappa, base)
    n_steps = max(0, int(np.floor((t_stop - times[0]) / dt + 1e-9)))
    rec_t, v_inf, u_inf, a_inf = [], [], [], []
    osx = 4

    def record(st: FlowState):
        app = _approx_deviation(approx, grid, st.time)
        u_inf.append(st.deviation_sup(osx))
        a_inf.append(float(np.max(sup_over_x(VelocityField.from_stream(stream_from_vorticity(app)), osx))))
        dv = VelocityField.from_stream(stream_from_vorticity(st.vorticity - app))
        v_inf.append(float(np.max(sup_over_x(dv, osx))))
        rec_t.append(st.time)
        if progress is not None:
            progress(st)

    try:
        march(state, dt, n_steps, forcing, record)
    except BlowUp:
        flags.append("blow-up guard tripped")
    return InstabilityRecord(np.array(rec_t), np.array(v_inf), np.array(u_inf), np.array(a_inf),
                             ccfg.nu ** ccfg.N, ccfg.nu, ccfg.N, lam,
                             cfg.dichotomy.beta, flags)


def _residual_forcing(approx, grid: Grid):
    """curl R_S^app on the sample mesh, linearly interpolated in time."""
    from .sublayer import nsapp_residual

    times = approx.times
    cache = {}

    def curl_at(i):
        if i not in cache:
            cache[i] = regrid(nsapp_residual(approx, times[i]).curl, grid).data
        return cache[i]

    def forcing(t):
        i = int(np.clip(np.searchsorted(times, t) - 1, 0, times.size - 2))
        a = (t - times[i]) / (times[i + 1] - times[i])
        return Field(grid, (1 - a) * curl_at(i) + a * curl_at(i + 1))

    return forcing


# ---------------------------------------------------------------------------
# sublayer variables


def sublayer_rescale(f: Field, nu: float) -> Field:
    """The same field in X = x / nu^{1/4}, Y = y / nu^{1/4}.

    The algebraic map is scale covariant, so the node set, period and map
    parameters are divided by nu^{1/4} and the coefficients carry over.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    d = float(nu) ** 0.25
    g = f.grid
    scaled = Grid(g.n_y, g.map_length / d, g.y_nodes / d, g.n_x, g.domain_period / d,
                  g.cluster / d)
    return Field(scaled, f.data.copy())


def rescaled_profile(f: Field, nu: float, Y) -> np.ndarray:
    """sup over x of |f| at sublayer heights Y."""
    d = float(nu) ** 0.25
    Y = np.asarray(Y, dtype=float)
    if np.any(Y * d > f.grid.y_max * (1 + 1e-12)) or np.any(Y < 0):
        raise GridError("requested sublayer heights lie outside the domain")
    return interpolate_y(f.grid, sup_over_x(f), Y * d)


def x_modulation_ratio(f: Union[Field, VelocityField], nu: float) -> float:
    """||d_X f|| / ||f|| in sublayer variables (L2)."""
    d = float(nu) ** 0.25
    if isinstance(f, VelocityField):
        num = discrete_norm(VelocityField(f.u.dx(), f.v.dx()), "L2")
    else:
        num = discrete_norm(f.dx(), "L2")
    den = discrete_norm(f, "L2")
    return d * num / den if den > 0 else 0.0


# ---------------------------------------------------------------------------
# persistence


def save_checkpoint(state: FlowState, path) -> Path:
    """npz snapshot with a version tag and the grid header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g = state.grid
    header = {"version": CHECKPOINT_VERSION, "time": state.time, "bc": state.bc,
              "nu_eff": state.nu_eff, "u_top": state.u_top, "n_y": g.n_y,
              "map_length": g.map_length, "n_x": g.n_x, "period": g.domain_period,
              "cluster": g.cluster}
    arrays = {"vorticity": state.vorticity.data, "y_nodes": g.y_nodes}
    if state.base is not None:
        arrays["base"] = state.base.values
        header["base_far_field"] = state.base.far_field
        header["base_label"] = state.base.label
    with path.open("wb") as fh:
        np.savez(fh, header=json.dumps(header), **arrays)
    return path


def load_checkpoint(path) -> FlowState:
    with np.load(Path(path)) as z:
        header = json.loads(str(z["header"]))
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        grid = Grid(header["n_y"], header["map_length"], z["y_nodes"].copy(), header["n_x"],
                    header["period"], header["cluster"])
        base = None
        if "base" in z:
            base = ShearProfile(z["base"].copy(), grid, header["base_label"],
                                header["base_far_field"])
        omega = Field(grid, z["vorticity"].copy())
    return FlowState(header["time"], omega, header["bc"], header["nu_eff"], base, header["u_top"])


def dump_record_csv(rec: InstabilityRecord, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "v_inf", "u_minus_Us_inf", "uapp_minus_Us_inf", "envelope"])
        env = rec.amplitude()
        for row in zip(rec.times, rec.v_inf, rec.u_minus_Us_inf, rec.uapp_minus_Us_inf, env):
            w.writerow([f"{x:.10e}" for x in row])
    return path
