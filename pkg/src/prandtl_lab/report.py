"""CSV tables, SVG plots and a text summary for a set of run records."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .sweep import RunRecord

__all__ = ["MASTER_COLUMNS", "emit_report"]

MASTER_COLUMNS = [
    "config_hash", "status", "nu", "N", "M", "beta", "seed", "alpha", "lam_re", "lam_im",
    "early_rate", "crossing_theta", "crossing_measured", "crossing_predicted", "residual_P",
    "verdict", "sigma0", "prandtl_margin", "sublayer_margin", "wall_slip_max", "error",
]


def _get(d: dict, *keys, default=""):
    for k in keys:
        if not isinstance(d, dict) or k not in d:
            return default
        d = d[k]
    return d


def _master_row(r: RunRecord) -> list:
    cfg = r.config
    cross = {}
    theta = ""
    if r.crossings:
        theta = sorted(r.crossings, key=float)[-1]
        cross = r.crossings[theta]
    err = (r.error or "").splitlines()[0] if r.error else ""
    return [r.config_hash, r.status, cfg.get("nu"), cfg.get("N"), cfg.get("M"),
            _get(cfg, "dichotomy", "beta"), cfg.get("seed"), _get(r.eigen, "alpha"),
            _get(r.eigen, "lam_re"), _get(r.eigen, "lam_im"), _get(r.fits, "early_rate"),
            theta, cross.get("measured", ""), cross.get("predicted", ""),
            _get(r.fits, "residual_P"), _get(r.verdict, "outcome"), _get(r.verdict, "sigma0"),
            _get(r.verdict, "prandtl_margin"), _get(r.verdict, "sublayer_margin"),
            _get(r.fits, "bound_fit", "wall_slip_max"), err]


def _plots(ok: Sequence[RunRecord], outdir: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    paths = []
    fig, ax = plt.subplots(figsize=(6, 4))
    for r in ok:
        s = r.series
        line, = ax.semilogy(s["t"], s["u_minus_Us_inf"], label=f"nu={r.config['nu']:g}")
        ax.semilogy(s["t"], np.maximum(s["v_inf"], 1e-300), ls=":", color=line.get_color())
        for c in r.crossings.values():
            if np.isfinite(c["predicted"]):
                ax.axvline(c["predicted"], color=line.get_color(), lw=0.6, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("||u - U_s||_inf (solid), ||v||_inf (dotted)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    paths.append(outdir / "growth.svg")
    fig.savefig(paths[-1])
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for r in ok:
        p = r.profiles
        ax.plot(p["collapse_eta"], p["collapse_vS1"], label=f"nu={r.config['nu']:g}")
    ax.set_xlabel("eta = y / nu^(1/4)")
    ax.set_ylabel("|v_S^1| / max")
    ax.legend(fontsize=7)
    fig.tight_layout()
    paths.append(outdir / "collapse.svg")
    fig.savefig(paths[-1])
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for r in ok:
        p = r.profiles
        eta, prof = np.asarray(p["residual_eta"]), np.asarray(p["residual_profile"])
        sel = prof > 0
        ax.semilogy(eta[sel], prof[sel], label=f"nu={r.config['nu']:g}")
    ax.axvline(10.0, color="k", lw=0.6, ls="--")
    ax.set_xscale("symlog", linthresh=1.0)
    ax.set_xlabel("eta = y / nu^(1/4)")
    ax.set_ylabel("sup_x |R_S^app|")
    ax.legend(fontsize=7)
    fig.tight_layout()
    paths.append(outdir / "residual.svg")
    fig.savefig(paths[-1])
    plt.close(fig)
    return paths


def _summary(records: Sequence[RunRecord]) -> str:
    lines = [f"{len(records)} run(s)"]
    for r in records:
        head = f"{r.config_hash} nu={r.config.get('nu'):g} N={r.config.get('N')}"
        if not r.ok:
            lines.append(f"{head}: error: {(r.error or '').splitlines()[0]}")
            continue
        v = r.verdict
        lines.append(f"{head}: verdict {v['outcome']} (sigma0={v['sigma0']:.4g}, "
                     f"prandtl margin={v['prandtl_margin']:.3g}, "
                     f"sublayer margin={v['sublayer_margin']:.3g})")
        for theta, c in sorted(r.crossings.items(), key=lambda kv: float(kv[0])):
            lines.append(f"    T*_{theta}: measured {c['measured']:.4g}, "
                         f"predicted {c['predicted']:.4g}")
        if r.series.get("flags"):
            lines.append("    flags: " + ", ".join(r.series["flags"]))
    return "\n".join(lines) + "\n"


def emit_report(records: Sequence[RunRecord], outdir) -> list[Path]:
    """Master CSV, per-run series CSVs, SVG plots and summary.txt."""
    records = list(records)
    if not records:
        raise ValueError("emit_report needs at least one record")
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "runs").mkdir(exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot write report to {outdir}: {exc}") from exc
    paths = [outdir / "master.csv"]
    with paths[0].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MASTER_COLUMNS)
        for r in records:
            w.writerow(_master_row(r))
    ok = [r for r in records if r.ok]
    for r in ok:
        p = outdir / "runs" / f"{r.config_hash}_series.csv"
        s = r.series
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "v_inf", "u_minus_Us_inf", "uapp_minus_Us_inf"])
            for row in zip(s["t"], s["v_inf"], s["u_minus_Us_inf"], s["uapp_minus_Us_inf"]):
                w.writerow([f"{x:.10e}" for x in row])
        paths.append(p)
    if ok:
        paths.extend(_plots(ok, outdir))
    paths.append(outdir / "summary.txt")
    paths[-1].write_text(_summary(records))
    return paths
