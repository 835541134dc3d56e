import json

import pytest
from hypothesis import given, settings, strategies as st

from prandtl_lab.config import (ExperimentConfig, config_hash, minimal_config, parse_config,
                                serialize_config)
from prandtl_lab.errors import ConfigError


def test_minimal_document_fills_defaults():
    cfg = parse_config('{"nu": 1e-4}')
    assert cfg == minimal_config(1e-4)
    assert cfg.grid.n_y == 321 and cfg.dns.bc == "NoSlip" and cfg.dns.t_max is None


@pytest.mark.parametrize("doc, key", [
    ({"nu": -1}, "nu"),
    ({"nu": 1.0}, "nu"),
    ({}, "nu"),
    ({"nu": 1e-4, "N": 0}, "N"),
    ({"nu": 1e-4, "M": 2.5}, "M"),
    ({"nu": 1e-4, "theta": [0, 3]}, "theta"),
    ({"nu": 1e-4, "grid": {"n_y": 8}}, "grid.n_y"),
    ({"nu": 1e-4, "dns": {"bc": "Periodic"}}, "dns.bc"),
    ({"nu": 1e-4, "dns": {"n_x": 4}}, "dns.n_x"),
    ({"nu": 1e-4, "dichotomy": {"beta": 0}}, "dichotomy.beta"),
    ({"nu": 1e-4, "seed": "Random"}, "seed"),
    ({"nu": 1e-4, "schema_version": 2}, "schema_version"),
    ({"nu": 1e-4, "gird": {}}, "gird"),
    ({"nu": 1e-4, "grid": {"ny": 3}}, "grid.ny"),
])
def test_invalid_documents_name_the_key(doc, key):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(doc))
    assert str(info.value).startswith(key + ":")


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError, match="line 2 column"):
        parse_config('{"nu": 1e-4,\n oops}')


def test_dotted_updates():
    cfg = minimal_config(1e-4).with_updates(**{"dichotomy.beta": 0.5, "grid.n_x": 16})
    assert cfg.dichotomy.beta == 0.5 and cfg.grid.n_x == 16 and cfg.dns.n_x == 16
    with pytest.raises(ConfigError):
        cfg.with_updates(**{"grid.n_x": 32})


configs = st.builds(
    lambda nu, N, M, beta, n_y, tmax, seed, bc: minimal_config(nu, N=N, M=M).with_updates(**{
        "dichotomy.beta": beta, "grid.n_y": n_y, "dns.t_max": tmax, "seed": seed, "dns.bc": bc}),
    st.floats(1e-6, 1e-2), st.integers(1, 4), st.integers(1, 8), st.floats(1e-3, 10.0),
    st.integers(16, 1025), st.one_of(st.none(), st.floats(1e-3, 100.0)),
    st.sampled_from(["PerturbPrandtl", "ForceSublayer"]), st.sampled_from(["NoSlip", "NavierSlip"]))


@settings(max_examples=60, deadline=None)
@given(configs)
def test_serialization_round_trip_is_exact(cfg):
    text = serialize_config(cfg)
    back = parse_config(text)
    assert back == cfg
    assert serialize_config(back) == text
    assert config_hash(back) == config_hash(cfg)


def test_hash_separates_configs():
    a = minimal_config(1e-4)
    assert config_hash(a) == config_hash(ExperimentConfig(nu=1e-4))
    assert config_hash(a) != config_hash(a.with_updates(**{"dichotomy.beta": 0.5}))
