"""Run records and the parallel sweep driver."""
from __future__ import annotations

import json
import time
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cascade import critical_time, verify_growth_bounds
from .config import SCHEMA_VERSION, ExperimentConfig, config_hash, from_document, to_document
from .dns import InstabilityRecord, classify_dichotomy, run_instability_experiment
from .sublayer import collapse_profiles, residual_series

__all__ = ["RunRecord", "run_experiment", "run_sweep", "load_records"]

COLLAPSE_T = 3.0          # in units of 1 / Re lambda
RESIDUAL_T = (1.0, 3.0, 5.0)


@dataclass
class RunRecord:
    config_hash: str
    config: dict
    status: str
    error: Optional[str] = None
    eigen: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    verdict: dict = field(default_factory=dict)
    crossings: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    version: str = __version__
    schema_version: int = SCHEMA_VERSION

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def experiment(self) -> ExperimentConfig:
        return from_document(self.config)

    def instability_record(self) -> InstabilityRecord:
        s = self.series
        return InstabilityRecord(np.array(s["t"]), np.array(s["v_inf"]),
                                 np.array(s["u_minus_Us_inf"]), np.array(s["uapp_minus_Us_inf"]),
                                 s["seeded_amplitude"], self.config["nu"], self.config["N"],
                                 complex(self.eigen["lam_re"], self.eigen["lam_im"]),
                                 self.config["dichotomy"]["beta"], list(s["flags"]))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))


def _floats(a) -> list:
    return [float(x) for x in np.asarray(a, dtype=float)]


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Full pipeline for one config; errors are captured into the record."""
    from .pipeline import build_approximation

    h = config_hash(cfg)
    doc = to_document(cfg)
    timings = {}
    try:
        pipe = build_approximation(cfg)
        timings.update(pipe.timings)
        mode, approx = pipe.mode, pipe.approx
        rate = mode.growth_rate
        eigen = {"alpha": mode.alpha, "c_re": mode.c.real, "c_im": mode.c.imag,
                 "lam_re": mode.lam.real, "lam_im": mode.lam.imag, "residual": mode.residual}
        t0 = time.perf_counter()
        rec = run_instability_experiment(cfg, approx)
        timings["dns"] = time.perf_counter() - t0
        verdict = classify_dichotomy(rec, cfg.dichotomy.beta, cfg.dichotomy.tau_factor / rate)
        t0 = time.perf_counter()
        res_times = [k / rate for k in RESIDUAL_T if k / rate <= approx.times[-1]]
        res = residual_series(approx, res_times)
        mid = res["reports"][len(res["reports"]) // 2]
        eta, prof, _ = collapse_profiles({cfg.nu: pipe.sublayer[0]}, COLLAPSE_T / rate)
        growth = verify_growth_bounds(pipe.cascade, cfg.N, kinds=("L2", "Linf"))
        timings["diagnostics"] = time.perf_counter() - t0
        ccfg = pipe.cascade_config
        crossings = {}
        for theta in cfg.theta:
            crossings[f"{theta:g}"] = {
                "measured": rec.crossing_time(cfg.nu ** theta),
                "predicted": critical_time(ccfg, theta, mode.lam),
            }
        fits = {
            "bound_fit": dict(approx.bound_fit),
            "cascade_growth": growth,
            "residual_P": res["P"],
            "residual_C": res["C"],
            "residual_beta": [r.beta for r in res["reports"]],
            "residual_beta_r2": [r.beta_r2 for r in res["reports"]],
            "residual_mass_fraction": [r.mass_fraction for r in res["reports"]],
            "route_mismatch": [r.route_mismatch for r in res["reports"]],
            "early_rate": rec.fitted_rate((0.0, 2.0 / rate)) if rec.times.size > 3 else None,
        }
        series = {"t": _floats(rec.times), "v_inf": _floats(rec.v_inf),
                  "u_minus_Us_inf": _floats(rec.u_minus_Us_inf),
                  "uapp_minus_Us_inf": _floats(rec.uapp_minus_Us_inf),
                  "seeded_amplitude": rec.seeded_amplitude, "flags": list(rec.flags)}
        g = approx.grid
        d = cfg.nu ** 0.25
        profiles = {
            "collapse_eta": _floats(eta), "collapse_vS1": _floats(np.abs(prof[cfg.nu])),
            "residual_t": mid.t, "residual_eta": _floats(g.y_nodes / d),
            "residual_profile": _floats(mid.profile),
        }
        verdict_d = {"outcome": verdict.outcome, "sigma0": verdict.sigma0,
                     "crossing_time": verdict.crossing_time,
                     "prandtl_margin": verdict.prandtl_margin,
                     "sublayer_margin": verdict.sublayer_margin}
        return RunRecord(h, doc, "ok", None, eigen, fits, series, verdict_d, crossings,
                         profiles, timings)
    except Exception as exc:  # noqa: BLE001 - a failed run becomes an error record
        return RunRecord(h, doc, "error", f"{type(exc).__name__}: {exc}\n"
                         f"{traceback.format_exc(limit=4)}", timings=timings)


def run_sweep(configs: Sequence[ExperimentConfig], parallelism: int = 1,
              out_path=None) -> list[RunRecord]:
    """Run configs with at most ``parallelism`` workers.

    Records are appended to ``out_path`` (JSON lines) by this process as runs
    finish; the returned list follows the input order.
    """
    if int(parallelism) != parallelism or parallelism < 1:
        raise ValueError("parallelism must be a positive integer")
    configs = list(configs)
    if not configs:
        return []
    out = None
    if out_path is not None:
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
    results: list[Optional[RunRecord]] = [None] * len(configs)

    def write(rec: RunRecord):
        if out is not None:
            with out.open("a") as fh:
                fh.write(rec.to_json() + "\n")

    if parallelism == 1:
        for i, cfg in enumerate(configs):
            results[i] = run_experiment(cfg)
            write(results[i])
        return results
    with ProcessPoolExecutor(max_workers=int(parallelism)) as pool:
        futures = {pool.submit(run_experiment, cfg): i for i, cfg in enumerate(configs)}
        for fut in as_completed(futures):
            i = futures[fut]
            try:
                rec = fut.result()
            except Exception as exc:  # noqa: BLE001 - worker crash
                cfg = configs[i]
                rec = RunRecord(config_hash(cfg), to_document(cfg), "error",
                                f"worker failure: {type(exc).__name__}: {exc}")
            results[i] = rec
            write(rec)
    return results


def load_records(path) -> list[RunRecord]:
    with Path(path).open() as fh:
        return [RunRecord.from_json(line) for line in fh if line.strip()]
