"""Command-line interface: ``prandtl-lab <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_hash, parse_config, serialize_config
from .errors import ConfigError, LabError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
OUTPUT_ENV = "PRANDTL_LAB_OUTPUT"

# flag -> dotted config key
_OVERRIDES = {
    "nu": "nu", "N": "N", "M": "M", "sublayer_M": "sublayer_M", "seed": "seed",
    "n_y": "grid.n_y", "map_length": "grid.map_length", "cluster": "grid.cluster",
    "n_x": "grid.n_x", "dns_n_x": "dns.n_x", "dt": "dns.dt", "t_max": "dns.t_max",
    "bc": "dns.bc", "beta": "dichotomy.beta", "tau": "dichotomy.tau_factor",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment configuration")
    p.add_argument("--nu", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--sublayer-M", dest="sublayer_M", type=int)
    p.add_argument("--seed", choices=("PerturbPrandtl", "ForceSublayer"))
    p.add_argument("--n-y", dest="n_y", type=int)
    p.add_argument("--map-length", dest="map_length", type=float)
    p.add_argument("--cluster", type=float)
    p.add_argument("--n-x", dest="n_x", type=int)
    p.add_argument("--dns-n-x", dest="dns_n_x", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--bc", choices=("NoSlip", "NavierSlip"))
    p.add_argument("--beta", type=float)
    p.add_argument("--tau", type=float, help="tau in units of 1 / Re lambda")
    p.add_argument("--output", type=Path, help=f"output directory (default ${OUTPUT_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prandtl-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("eigen", "Rayleigh spectrum dump and most unstable mode"),
                        ("cascade", "inviscid cascade norms and growth fits"),
                        ("stokes", "sublayer terms, residual and collapse profile"),
                        ("dns", "full instability experiment for one configuration")]:
        _common(sub.add_parser(name, help=help_))
    sw = sub.add_parser("sweep", help="run several configurations")
    _common(sw)
    sw.add_argument("--nu-list", type=float, nargs="+", help="sweep over these nu")
    sw.add_argument("--beta-list", type=float, nargs="+", help="sweep over these beta")
    sw.add_argument("--parallel", type=int, default=1)
    rp = sub.add_parser("report", help="CSV, SVG and summary from a records file")
    rp.add_argument("records", type=Path)
    rp.add_argument("--output", type=Path)
    return parser


def _config(args) -> ExperimentConfig:
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        cfg = parse_config(text)
    else:
        if args.nu is None:
            raise ConfigError("nu: give --nu or --config")
        cfg = ExperimentConfig(nu=args.nu)
    changes = {key: getattr(args, flag) for flag, key in _OVERRIDES.items()
               if getattr(args, flag, None) is not None}
    return cfg.with_updates(**changes) if changes else cfg


def _outdir(args, cfg: ExperimentConfig | None = None) -> Path:
    if args.output is not None:
        root = args.output
    elif os.environ.get(OUTPUT_ENV):
        root = Path(os.environ[OUTPUT_ENV])
    else:
        root = Path(cfg.output_dir if cfg is not None else "prandtl_lab_output")
    root.mkdir(parents=True, exist_ok=True)
    return root


def _cmd_eigen(args) -> int:
    from .pipeline import build_profile, mode_grid
    from .rayleigh import dump_spectrum, max_growth_mode, rayleigh_spectrum

    cfg = _config(args)
    out = _outdir(args, cfg)
    g = mode_grid(cfg)
    U = build_profile(cfg, g)
    lo, hi, count = cfg.alpha_scan
    modes = []
    for a in np.linspace(lo, hi, count):
        modes.extend(rayleigh_spectrum(U, a, tol=1e-3))
    path = dump_spectrum(modes, out / "spectrum.csv")
    m = max_growth_mode(U, np.linspace(lo, hi, count), tol=1e-3)
    print(f"alpha={m.alpha:.6g} c={m.c.real:.8g}{m.c.imag:+.8g}i "
          f"Re(lambda)={m.growth_rate:.8g}")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_cascade(args) -> int:
    from .cascade import CascadeConfig, build_cascade, dump_cascade_csv, verify_growth_bounds
    from .pipeline import build_profile, find_mode, mode_grid

    cfg = _config(args)
    out = _outdir(args, cfg)
    g = mode_grid(cfg)
    U = build_profile(cfg, g)
    mode = find_mode(cfg, U)
    terms = build_cascade(mode, CascadeConfig(cfg.N, cfg.M, cfg.nu), U, n_x=cfg.grid.n_x)
    path = dump_cascade_csv(terms, out / "cascade.csv")
    for row in verify_growth_bounds(terms, cfg.N, kinds=("L2", "Linf")):
        print(f"j={row['j']} {row['norm']}: rate {row['rate']:.5g} "
              f"target {row['target']:.5g} rel err {row['rel_err']:.3g}")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_stokes(args) -> int:
    from .pipeline import build_approximation
    from .sublayer import (collapse_profiles, dump_collapse_csv, dump_residual_csv,
                           residual_series)

    cfg = _config(args)
    out = _outdir(args, cfg)
    pipe = build_approximation(cfg)
    rate = pipe.mode.growth_rate
    eta, prof, _ = collapse_profiles({cfg.nu: pipe.sublayer[0]}, 3.0 / rate)
    dump_collapse_csv(eta, prof, out / "collapse.csv")
    res = residual_series(pipe.approx, [k / rate for k in (1.0, 3.0, 5.0)])
    dump_residual_csv(res, out / "residual.csv")
    for r in res["reports"]:
        print(f"t={r.t:.4g}: ||R||_inf={r.linf:.4g} beta={r.beta:.3g} (R2={r.beta_r2:.3f}) "
              f"mass below 10 nu^1/4: {100 * r.mass_fraction:.2f}%")
    print(f"fitted P={res['P']:.3g}; wall slip {pipe.approx.bound_fit['wall_slip_max']:.2e}")
    return EXIT_OK


def _cmd_dns(args) -> int:
    from .dns import dump_record_csv
    from .sweep import run_experiment

    cfg = _config(args)
    out = _outdir(args, cfg)
    rec = run_experiment(cfg)
    (out / f"{rec.config_hash}.json").write_text(rec.to_json())
    (out / f"{rec.config_hash}_config.json").write_text(serialize_config(cfg))
    if not rec.ok:
        print(rec.error, file=sys.stderr)
        return EXIT_NUMERICAL
    dump_record_csv(rec.instability_record(), out / f"{rec.config_hash}_series.csv")
    v = rec.verdict
    print(f"{rec.config_hash}: {v['outcome']} sigma0={v['sigma0']:.4g} "
          f"margins {v['prandtl_margin']:.3g} / {v['sublayer_margin']:.3g}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .report import emit_report
    from .sweep import run_sweep

    base = _config(args)
    out = _outdir(args, base)
    configs = [base]
    if args.nu_list:
        configs = [c.with_updates(nu=nu) for c in configs for nu in args.nu_list]
    if args.beta_list:
        configs = [c.with_updates(**{"dichotomy.beta": b}) for c in configs for b in args.beta_list]
    records = run_sweep(configs, args.parallel, out / "records.jsonl")
    emit_report(records, out)
    for r in records:
        state = r.verdict.get("outcome") if r.ok else "error"
        print(f"{r.config_hash} nu={r.config['nu']:g}: {state}")
    return EXIT_OK if all(r.ok for r in records) else EXIT_NUMERICAL


def _cmd_report(args) -> int:
    from .report import emit_report
    from .sweep import load_records

    try:
        records = load_records(args.records)
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot read records {args.records}: {exc}") from exc
    out = _outdir(args)
    for p in emit_report(records, out):
        print(f"wrote {p}")
    return EXIT_OK


_COMMANDS = {"eigen": _cmd_eigen, "cascade": _cmd_cascade, "stokes": _cmd_stokes,
             "dns": _cmd_dns, "sweep": _cmd_sweep, "report": _cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LabError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
