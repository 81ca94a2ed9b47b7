import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nlcflow.spectral import Grid, ScalarField, VectorField3

settings.register_profile("default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def box():
    """16^3 grid on the 2 pi box, where mode m has wavenumber m."""
    return Grid(16, 2 * math.pi)


def random_scalar(grid, seed, slope=2.0, mean_free=False):
    rng = np.random.default_rng(seed)
    c = np.fft.fftn(rng.standard_normal(grid.shape), norm="forward")
    c *= (1 + grid.k_squared) ** (-slope / 2)
    if mean_free:
        c[0, 0, 0] = 0
    return ScalarField(grid, np.fft.ifftn(c, norm="forward").real)


def random_vector(grid, seed, slope=2.0):
    return VectorField3(tuple(random_scalar(grid, [seed, i], slope) for i in range(3)))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
