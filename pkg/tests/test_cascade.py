import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prandtl_lab.baseflow import apply_s, apply_s_vorticity, tanh_shifted
from prandtl_lab.cascade import (CascadeConfig, Trajectory, _Kinematics, build_cascade,
                                 critical_time, euler_residual, fit_growth, residual_pairs,
                                 source_pairs)
from prandtl_lab.errors import ConfigError
from prandtl_lab.spectral import Field, VelocityField, advection, build_halfline_grid


def test_source_pairs():
    assert source_pairs(1, 1) == []
    assert source_pairs(2, 1) == [(0, 0)]
    assert source_pairs(4, 1) == [(0, 2), (1, 1), (2, 0)]
    assert source_pairs(4, 1, include_zero_order=False) == [(1, 1)]


def test_residual_pairs_complement_sources():
    used = {p for j in range(1, 3) for p in source_pairs(j, 1)}
    left = set(residual_pairs(2, 1))
    assert used.isdisjoint(left)
    assert used | left == {(k, l) for k in range(3) for l in range(3)}


@pytest.mark.parametrize("kw", [dict(N=0, M=1, nu=1e-4), dict(N=1, M=0, nu=1e-4),
                                dict(N=1, M=1, nu=2.0), dict(N=1, M=1, nu=0.5)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        CascadeConfig(**kw)


def test_config_derived_quantities():
    cfg = CascadeConfig(N=2, M=3, nu=1e-2)
    assert cfg.P == pytest.approx(2.0)
    assert cfg.weight(2) == pytest.approx(1e-2 ** 3)
    assert cfg.kappa == pytest.approx(0.1)


def test_critical_time():
    cfg = CascadeConfig(N=1, M=1, nu=1e-4)
    assert critical_time(cfg, 0.0, 2.0 + 1j) == pytest.approx(np.log(1e4) / 2.0)
    assert critical_time(cfg, 0.5, 2.0) == pytest.approx(0.5 * np.log(1e4) / 2.0)
    with pytest.raises(ValueError):
        critical_time(cfg, 2.0, 2.0)
    with pytest.raises(ValueError):
        critical_time(cfg, 0.0, -1.0)


def test_fit_growth_recovers_exponential():
    t = np.linspace(0, 3, 31)
    rate, c = fit_growth(t, 0.3 * np.exp(1.7 * t), (1.0, 2.0))
    assert rate == pytest.approx(1.7) and c == pytest.approx(0.3)
    with pytest.raises(ValueError):
        fit_growth(t, np.exp(t), (5.0, 6.0))


def test_trajectory_interpolates_and_differentiates(small_grid):
    t = np.linspace(0, 1, 41)
    data = np.exp(t)[:, None, None] * np.ones((1,) + small_grid.shape)
    traj = Trajectory(small_grid, t, data)
    assert np.allclose(traj.at(0.3337), np.exp(0.3337), rtol=1e-6)
    assert np.allclose(traj.rate(0.5), np.exp(0.5), rtol=1e-4)
    with pytest.raises(ValueError):
        traj.at(1.5)


def _smooth_field(g, rng):
    y = g.y_nodes
    data = np.zeros(g.shape, complex)
    for k in (1, 2):
        c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        prof = (c[0] * y ** 2 + c[1] * y ** 3) * np.exp(-y)
        data[g.mode_index(k)] = prof
        data[g.mode_index(-k)] = np.conj(prof)
    return data


@pytest.fixture(scope="module")
def fine_grid():
    return build_halfline_grid(160, 4.0, 8, 2 * np.pi, cluster=2.0)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_polarisation_identity(fine_grid, seed):
    """curl(a.grad b + b.grad a) = a.grad omega_b + b.grad omega_a."""
    rng = np.random.default_rng(seed)
    a = _Kinematics(fine_grid, _smooth_field(fine_grid, rng))
    b = _Kinematics(fine_grid, _smooth_field(fine_grid, rng))
    va, vb = VelocityField(a.u, a.v), VelocityField(b.u, b.v)
    lhs = (advection(va, vb) + advection(vb, va)).curl().data
    rhs = (a.advect(b) + b.advect(a)).data
    assert np.max(np.abs(lhs - rhs)) < 1e-6 * np.max(np.abs(rhs))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_curl_of_s_operator(fine_grid, seed):
    """curl(S v) = A d_x omega - v_2 A''."""
    rng = np.random.default_rng(seed)
    U = tanh_shifted(fine_grid, amplitude=4, shift=3.0)
    kin = _Kinematics(fine_grid, _smooth_field(fine_grid, rng))
    v = VelocityField(kin.u, kin.v)
    lhs = apply_s(v, U, 0.5, 1e-4).curl().data
    rhs = apply_s_vorticity(kin.omega, kin.v, U, 0.5, 1e-4).data
    assert np.max(np.abs(lhs - rhs)) < 1e-6 * np.max(np.abs(rhs))


@pytest.fixture(scope="module")
def cascade(experiment_mode):
    U, mode = experiment_mode
    cfg = CascadeConfig(N=1, M=1, nu=1e-4)
    return cfg, U, build_cascade(mode, cfg, U)


def test_cascade_terms_start_from_zero(cascade):
    _, _, terms = cascade
    assert [t.j for t in terms] == [0, 1]
    assert not np.any(terms[1].vorticity(0.0).data)
    assert terms[1].vorticity(terms[1].times[-1]).is_real()


def test_cascade_mesh_ends_at_critical_time(cascade):
    cfg, _, terms = cascade
    assert terms[1].times[-1] == pytest.approx(critical_time(cfg, 0.0, terms[0].mode.lam))


def test_euler_residual_is_real(cascade):
    cfg, U, terms = cascade
    E, curl = euler_residual(terms, cfg, U, 1.0)
    assert curl.is_real(1e-12 * max(1.0, np.max(np.abs(curl.data))))
