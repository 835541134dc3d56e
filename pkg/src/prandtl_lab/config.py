"""Versioned experiment configuration (JSON) with strict validation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

from .errors import ConfigError

__all__ = [
    "SCHEMA_VERSION", "ProfileSpec", "GridSpec", "DNSSpec", "DichotomySpec",
    "ExperimentConfig", "parse_config", "serialize_config", "config_hash", "minimal_config",
]

SCHEMA_VERSION = 1
NU_RANGE = (1e-6, 1e-2)
MAX_M = 8
MAX_N = 4
SEEDS = ("PerturbPrandtl", "ForceSublayer")
BCS = ("NoSlip", "NavierSlip")


@dataclass(frozen=True)
class ProfileSpec:
    family: str = "tanh_shifted"
    params: dict = field(default_factory=lambda: {"amplitude": 32.0, "shift": 3.0})


@dataclass(frozen=True)
class GridSpec:
    n_y: int = 321
    map_length: float = 4.0
    cluster: float = 2.0
    n_x: int = 8


@dataclass(frozen=True)
class DNSSpec:
    n_x: Optional[int] = 16
    dt: Optional[float] = None
    t_max: Optional[float] = None
    bc: str = "NoSlip"


@dataclass(frozen=True)
class DichotomySpec:
    beta: float = 1.0
    tau_factor: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.  ``alpha_scan`` is (lo, hi, count); ``tau_factor`` is tau
    in units of 1 / Re lambda; ``dns.t_max`` None means up to T*_0 - tau."""
    nu: float
    N: int = 1
    M: int = 1
    sublayer_M: int = 2
    theta: tuple = (0.0, 0.5)
    alpha_scan: tuple = (0.47, 0.47, 1)
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    dns: DNSSpec = field(default_factory=DNSSpec)
    dichotomy: DichotomySpec = field(default_factory=DichotomySpec)
    seed: str = "PerturbPrandtl"
    output_dir: str = "prandtl_lab_output"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        _check(isinstance(self.nu, (int, float)) and NU_RANGE[0] <= self.nu <= NU_RANGE[1],
               "nu", f"must lie in [{NU_RANGE[0]:g}, {NU_RANGE[1]:g}]")
        _check(_is_int(self.N) and 1 <= self.N <= MAX_N, "N", f"must be an integer in [1, {MAX_N}]")
        _check(_is_int(self.M) and 1 <= self.M <= MAX_M, "M", f"must be an integer in [1, {MAX_M}]")
        _check(_is_int(self.sublayer_M) and 1 <= self.sublayer_M <= MAX_M, "sublayer_M",
               f"must be an integer in [1, {MAX_M}]")
        _check(all(0 <= th <= self.N for th in self.theta), "theta", "entries must lie in [0, N]")
        lo, hi, count = self.alpha_scan
        _check(0 < lo <= hi and _is_int(count) and count >= 1 and (count > 1 or lo == hi),
               "alpha_scan", "must be (lo, hi, count) with 0 < lo <= hi")
        g = self.grid
        _check(_is_int(g.n_y) and 16 <= g.n_y <= 1025, "grid.n_y", "must be an integer in [16, 1025]")
        _check(g.map_length > 0 and g.cluster > 0, "grid", "map_length and cluster must be positive")
        _check(_is_int(g.n_x) and g.n_x >= 4, "grid.n_x", "must be an integer >= 4")
        d = self.dns
        _check(d.n_x is None or (_is_int(d.n_x) and d.n_x >= g.n_x), "dns.n_x",
               "must be at least grid.n_x")
        _check(d.dt is None or d.dt > 0, "dns.dt", "must be positive")
        _check(d.t_max is None or d.t_max > 0, "dns.t_max", "must be positive")
        _check(d.bc in BCS, "dns.bc", f"must be one of {BCS}")
        _check(self.dichotomy.beta > 0, "dichotomy.beta", "must be positive")
        _check(self.dichotomy.tau_factor >= 0, "dichotomy.tau_factor", "must be non-negative")
        _check(self.seed in SEEDS, "seed", f"must be one of {SEEDS}")
        _check(self.schema_version == SCHEMA_VERSION, "schema_version",
               f"unsupported (expected {SCHEMA_VERSION})")

    def with_updates(self, **changes) -> "ExperimentConfig":
        doc = to_document(self)
        for key, value in changes.items():
            node = doc
            *path, leaf = key.split(".")
            for p in path:
                node = node[p]
            node[leaf] = value
        return from_document(doc)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check(ok: bool, key: str, msg: str) -> None:
    if not ok:
        raise ConfigError(f"{key}: {msg}")


_NESTED = {"profile": ProfileSpec, "grid": GridSpec, "dns": DNSSpec, "dichotomy": DichotomySpec}


def _build(cls, doc: dict, prefix: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{prefix or 'document'}: expected an object")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(doc) - names)
    if unknown:
        raise ConfigError(f"{prefix + '.' if prefix else ''}{unknown[0]}: unknown key")
    kw = {}
    for key, value in doc.items():
        if cls is ExperimentConfig and key in _NESTED:
            value = _build(_NESTED[key], value, key)
        elif key in ("theta", "alpha_scan"):
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key}: expected a list")
            value = tuple(value)
        kw[key] = value
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"{prefix or 'document'}: {exc}") from exc


def from_document(doc: dict) -> ExperimentConfig:
    if "nu" not in doc:
        raise ConfigError("nu: required key missing")
    return _build(ExperimentConfig, doc, "")


def to_document(cfg: ExperimentConfig) -> dict:
    doc = asdict(cfg)
    doc["theta"] = list(cfg.theta)
    doc["alpha_scan"] = list(cfg.alpha_scan)
    return doc


def parse_config(text: str) -> ExperimentConfig:
    """Validated config from a JSON document; defaults fill missing keys."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_document(doc)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON; floats use repr so the round trip is bit exact."""
    return json.dumps(to_document(cfg), sort_keys=True, indent=2)


def config_hash(cfg: ExperimentConfig) -> str:
    canon = json.dumps(to_document(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def minimal_config(nu: float, **kw: Any) -> ExperimentConfig:
    return ExperimentConfig(nu=nu, **kw)
