import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc

from prandtl_lab.errors import GridError, TraceError
from prandtl_lab.spectral import build_halfline_grid
from prandtl_lab.sublayer import (WallTrace, build_sublayer_cascade, dump_collapse_csv,
                                  dump_residual_csv, nsapp_residual, residual_series,
                                  solve_stokes_layer, sublayer_scale)

NU = 1e-4


@pytest.fixture(scope="module")
def layer_grid():
    return build_halfline_grid(96, 2.0, 4, 2 * np.pi, cluster=0.5)


def _mean_trace(times, value, n_x=4):
    def f(t):
        out = np.zeros(n_x, complex)
        out[0] = value
        return out
    return WallTrace.from_function(times, n_x, f)


def test_trace_shapes_checked():
    with pytest.raises(ValueError):
        WallTrace(np.arange(3.0), np.zeros((2, 4)), np.zeros((2, 4)))


def test_trace_returns_samples_at_knots():
    t = np.linspace(0, 1, 5)
    tr = WallTrace.from_function(t, 2, lambda s: np.array([s ** 3, 0.0]))
    assert tr(0.5)[0] == 0.125
    assert (-tr)(0.5)[0] == -0.125


def test_normal_trace_rejected(layer_grid):
    t = np.linspace(0, 1, 11)
    tr = WallTrace(t, np.zeros((11, 4)), np.full((11, 4), 1e-3))
    with pytest.raises(TraceError):
        solve_stokes_layer(tr, NU, layer_grid)


def test_trace_grid_mismatch(layer_grid):
    with pytest.raises(GridError):
        solve_stokes_layer(_mean_trace(np.linspace(0, 1, 5), 1.0, n_x=2), NU, layer_grid)


def test_impulsive_mean_trace_gives_erfc(layer_grid):
    """Stokes' first problem: wall speed 1 switched on at t = 0."""
    t = np.linspace(0, 1, 101)
    term = solve_stokes_layer(_mean_trace(t, 1.0), NU, layer_grid)
    u = term.velocity(1.0).u.mode(0).real
    exact = erfc(layer_grid.y_nodes / (2 * np.sqrt(np.sqrt(NU) * 1.0)))
    assert np.max(np.abs(u - exact)) <= 1e-4
    assert abs(term.wall_velocity(0.5)[0] - 1.0) < 1e-12


@settings(max_examples=5, deadline=None)
@given(scale=st.floats(-5, 5).filter(lambda s: abs(s) > 1e-3))
def test_stokes_layer_is_linear_in_its_data(layer_grid, scale):
    t = np.linspace(0, 0.5, 26)
    a = solve_stokes_layer(_mean_trace(t, 1.0), NU, layer_grid)
    b = solve_stokes_layer(_mean_trace(t, scale), NU, layer_grid)
    assert np.allclose(b.vorticity(0.5).data, scale * a.vorticity(0.5).data, atol=1e-10 * abs(scale))


def test_sublayer_scale():
    assert sublayer_scale(1e-4) == pytest.approx(0.1)


def test_unresolved_sublayer_grid_rejected(pipelines):
    pipe = pipelines(1e-4)
    with pytest.raises(GridError):
        build_sublayer_cascade(pipe.approx.large, 1, nu=1e-12)


def test_assembled_solution_structure(pipelines):
    ap = pipelines(1e-4).approx
    assert ap.bound_fit["wall_slip_max"] <= 1e-8
    assert ap.bound_fit["divergence_max"] <= 1e-12
    assert ap.bound_fit["c2_lower"] > 0


def test_sublayer_terms_shrink_with_order(pipelines):
    pipe = pipelines(1e-4)
    t = 3.0 / pipe.mode.growth_rate
    m1, m2 = (float(np.max(term.magnitude(t))) for term in pipe.sublayer)
    assert m2 < 0.1 * m1


def test_first_sublayer_term_cancels_the_slip(pipelines):
    pipe = pipelines(1e-4)
    t = 2.0 / pipe.mode.growth_rate
    trace = pipe.approx.large.wall_trace()
    assert np.allclose(pipe.sublayer[0].wall_velocity(t), -trace(t), atol=1e-12)


def test_residual_routes_agree_above_the_layer(pipelines):
    pipe = pipelines(1e-4)
    rep = nsapp_residual(pipe.approx, 3.0 / pipe.mode.growth_rate)
    assert rep.route_mismatch < 1e-2
    assert rep.curl.is_real(1e-10 * rep.curl_linf)


def test_residual_csv_outputs(tmp_path, pipelines):
    pipe = pipelines(1e-4)
    rate = pipe.mode.growth_rate
    series = residual_series(pipe.approx, [1.0 / rate, 2.0 / rate])
    p = dump_residual_csv(series, tmp_path / "r.csv")
    assert len(p.read_text().splitlines()) == 3
    eta = np.linspace(0, 1, 3)
    q = dump_collapse_csv(eta, {1e-4: eta}, tmp_path / "c.csv")
    assert len(q.read_text().splitlines()) == 4
