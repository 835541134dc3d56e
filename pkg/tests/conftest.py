import numpy as np
import pytest

from prandtl_lab.config import ExperimentConfig
from prandtl_lab.pipeline import build_approximation, build_profile, find_mode, mode_grid
from prandtl_lab.spectral import build_halfline_grid


@pytest.fixture(scope="session")
def small_grid():
    return build_halfline_grid(48, 2.0, 8, 2 * np.pi, cluster=1.0)


@pytest.fixture(scope="session")
def experiment_config():
    return ExperimentConfig(nu=1e-4)


@pytest.fixture(scope="session")
def experiment_mode(experiment_config):
    g = mode_grid(experiment_config)
    U = build_profile(experiment_config, g)
    return U, find_mode(experiment_config, U)


@pytest.fixture(scope="session")
def pipelines():
    """Full approximate solutions at the two viscosities used for collapse."""
    cache = {}

    def get(nu):
        if nu not in cache:
            cache[nu] = build_approximation(ExperimentConfig(nu=nu))
        return cache[nu]

    return get


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
