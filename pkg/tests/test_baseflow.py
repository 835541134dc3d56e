import numpy as np
import pytest

from prandtl_lab.baseflow import (ShearProfile, erf_selfsimilar, evolve_heat, from_function,
                                  load_table, make_profile, s_coefficient, tanh_shifted,
                                  wall_jet)
from prandtl_lab.errors import ConfigError, GridError, IllPosed
from prandtl_lab.spectral import build_halfline_grid


@pytest.fixture(scope="module")
def grid():
    return build_halfline_grid(160, 4.0, 1, 1.0, cluster=2.0)


def test_profile_must_vanish_at_wall(grid):
    with pytest.raises(IllPosed):
        from_function(grid, lambda z: 1.0 + 0 * z, "lifted", 1.0)


def test_profile_must_reach_far_field(grid):
    with pytest.raises(IllPosed):
        from_function(grid, lambda z: z / 10.0, "ramp", 2.0)


def test_profile_shape_checked(grid):
    with pytest.raises(GridError):
        ShearProfile(np.zeros(3), grid, "bad", 0.0)


def test_unknown_family(grid):
    with pytest.raises(ConfigError):
        make_profile(grid, "parabola")


@pytest.mark.parametrize("factory", [wall_jet, erf_selfsimilar,
                                     lambda g: tanh_shifted(g, amplitude=32, shift=3.0)])
def test_exact_derivatives_match_spectral(grid, factory):
    U = factory(grid)
    for order, D in ((1, grid.D1), (2, grid.D2)):
        scale = max(1.0, np.max(np.abs(U.derivative(order))))
        assert np.max(np.abs(D @ U.values - U.derivative(order))) < 1e-5 * scale


def test_inflection_points(grid):
    assert np.allclose(wall_jet(grid).inflection_points(), [2.0], atol=0.2)
    assert erf_selfsimilar(grid).inflection_points().size == 0


def test_heat_self_similar_erf_to_1e8(grid):
    U = from_function(grid, lambda z: erf_selfsimilar(grid)(z), "erf numeric", 1.0)
    for t in (0.1, 0.5, 1.0):
        exact = erf_selfsimilar(grid, t0=1.0 + t).values
        assert np.max(np.abs(evolve_heat(U, t).values - exact)) < 1e-8


def test_heat_analytic_shortcut(grid):
    ev = evolve_heat(erf_selfsimilar(grid), 0.5)
    assert ev.profile_at_t.params["t0"] == pytest.approx(1.5)
    assert np.allclose(ev.shear_vorticity, -ev.profile_at_t.derivative(1))


def test_heat_rejects_negative_time(grid):
    with pytest.raises(ValueError):
        evolve_heat(wall_jet(grid), -1.0)


def test_s_coefficient_vanishes_initially_and_is_order_t(grid):
    U = tanh_shifted(grid, amplitude=4, shift=3.0)
    assert not np.any(s_coefficient(U, 0.0, 1e-4)[0])
    A1 = s_coefficient(U, 0.1, 1e-4)[0]
    A2 = s_coefficient(U, 0.2, 1e-4)[0]
    assert np.max(np.abs(A2)) == pytest.approx(2 * np.max(np.abs(A1)), rel=1e-2)


def test_table_profile(tmp_path, grid):
    z = np.linspace(0, 10, 41)
    p = tmp_path / "u.txt"
    np.savetxt(p, np.c_[z, np.tanh(z)], header="z U")
    U = load_table(p, grid)
    assert U.far_field == pytest.approx(np.tanh(10.0))
    with pytest.raises(ConfigError):
        load_table(tmp_path / "missing.txt", grid)
