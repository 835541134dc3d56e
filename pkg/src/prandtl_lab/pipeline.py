"""Assemble the whole construction (mode, cascade, corrector, sublayer) from a
configuration, and the eigenmode-seeded DNS used for the timing laws."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baseflow import ShearProfile, make_profile
from .cascade import (CascadeConfig, CascadeTerm, CorrectorTrajectory, _mode_vorticity,
                      build_cascade, solve_corrector)
from .config import ExperimentConfig
from .dns import FlowState, march
from .rayleigh import EigenMode, max_growth_mode
from .spectral import Field, Grid, build_halfline_grid
from .sublayer import (ApproxSolution, LargeScaleFlow, SublayerTerm, assemble_approx,
                       build_sublayer_cascade)

__all__ = ["Pipeline", "mode_grid", "build_profile", "find_mode", "build_approximation",
           "seeded_mode_run", "SeededRun"]

# the mode-selection filter compares n_y and 2 n_y; the critical-layer pole
# limits that agreement to about 1e-4 on the experiment grid
MODE_TOL = 1e-3


def mode_grid(cfg: ExperimentConfig) -> Grid:
    g = cfg.grid
    return build_halfline_grid(g.n_y, g.map_length, 1, 1.0, cluster=g.cluster)


def build_profile(cfg: ExperimentConfig, grid: Grid) -> ShearProfile:
    return make_profile(grid, cfg.profile.family, **dict(cfg.profile.params))


def find_mode(cfg: ExperimentConfig, U: ShearProfile) -> EigenMode:
    lo, hi, count = cfg.alpha_scan
    return max_growth_mode(U, np.linspace(lo, hi, count), tol=MODE_TOL)


@dataclass(eq=False)
class Pipeline:
    config: ExperimentConfig
    profile: ShearProfile
    mode: EigenMode
    cascade: list[CascadeTerm]
    corrector: Optional[CorrectorTrajectory]
    sublayer: list[SublayerTerm]
    approx: ApproxSolution
    timings: dict = field(default_factory=dict)

    @property
    def cascade_config(self) -> CascadeConfig:
        return self.approx.cfg


def build_approximation(cfg: ExperimentConfig, with_corrector: bool = True) -> Pipeline:
    """Mode, cascade u^1..u^M, corrector and sublayer terms, assembled."""
    timings = {}
    t0 = time.perf_counter()
    g = mode_grid(cfg)
    U = build_profile(cfg, g)
    mode = find_mode(cfg, U)
    timings["eigen"] = time.perf_counter() - t0
    ccfg = CascadeConfig(N=cfg.N, M=cfg.M, nu=cfg.nu)
    t0 = time.perf_counter()
    terms = build_cascade(mode, ccfg, U, n_x=cfg.grid.n_x)
    timings["cascade"] = time.perf_counter() - t0
    corrector = None
    if with_corrector:
        t0 = time.perf_counter()
        corrector = solve_corrector(terms, ccfg, U)
        timings["corrector"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    large = LargeScaleFlow(U, terms, ccfg, corrector)
    sub = build_sublayer_cascade(large, cfg.sublayer_M)
    timings["sublayer"] = time.perf_counter() - t0
    approx = assemble_approx(U, terms, corrector, sub, ccfg)
    return Pipeline(cfg, U, mode, terms, corrector, sub, approx, timings)


@dataclass(eq=False)
class SeededRun:
    """DNS from U + nu^N Re(u_e): times and ||u - U_s||_inf."""
    times: np.ndarray
    deviation: np.ndarray
    nu: float
    N: int
    lam: complex

    def crossing_time(self, level: float) -> float:
        above = np.flatnonzero(self.deviation >= level)
        if above.size == 0:
            return float("nan")
        i = int(above[0])
        if i == 0:
            return float(self.times[0])
        t0, t1 = self.times[i - 1], self.times[i]
        y0, y1 = np.log(self.deviation[i - 1]), np.log(self.deviation[i])
        return float(t0 + (t1 - t0) * (np.log(level) - y0) / (y1 - y0))

    def fitted_rate(self, window: tuple[float, float]) -> float:
        sel = (self.times >= window[0] - 1e-12) & (self.times <= window[1] + 1e-12)
        return float(np.polyfit(self.times[sel], np.log(self.deviation[sel]), 1)[0])


def seeded_mode_run(mode: EigenMode, U: ShearProfile, nu: float, N: int, t_end: float,
                    n_x: int = 16, dt: Optional[float] = None, bc: str = "NoSlip") -> SeededRun:
    """March U + a Re(u_e), with a chosen so that ||u - U_s||_inf = nu^N at
    t = 0, through the full nonlinear equations on the mode's y-grid."""
    grid = mode.grid.with_x(n_x, mode.period)
    base = U.on_grid(grid)
    w0 = Field(grid, _mode_vorticity(mode, grid, 0.0))
    unit = FlowState(0.0, w0, bc, float(np.sqrt(nu)), base)
    w0 = w0 * (nu ** N / unit.deviation_sup())
    state = unit.with_vorticity(w0, 0.0)
    if dt is None:
        kmax = grid.alpha0 * (n_x // 3)
        dt = 0.5 / (kmax * np.max(np.abs(base.values)))
    n = int(np.ceil(t_end / dt))
    dt = t_end / n
    times, dev = [], []

    def record(st):
        times.append(st.time)
        dev.append(st.deviation_sup())

    march(state, dt, n, None, record)
    return SeededRun(np.array(times), np.array(dev), nu, N, mode.lam)
