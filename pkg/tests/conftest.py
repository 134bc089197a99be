import numpy as np
import pytest

from siwskit import GeometricGrid, LsspParams, ModelSpec

TWO_PI = 2.0 * np.pi


def mq_closed(H, theta):
    """Analytic Mellin transform of Q for the built-in family (log-Gaussian integral)."""
    z = 2.0 * H - 1j * TWO_PI * np.asarray(theta)
    return np.sqrt(TWO_PI) * np.exp(0.5 * z * z)


def mc_closed(c, xi):
    """Analytic Mellin transform of C: a Gaussian integral in ln tau."""
    return np.sqrt(8.0 * np.pi / c) * np.exp(-2.0 * (TWO_PI * np.asarray(xi)) ** 2 / c)


@pytest.fixture
def example_model():
    return ModelSpec.lssp(0.5, 1.1)


@pytest.fixture
def example_params():
    return LsspParams(0.5, 1.1)


@pytest.fixture
def small_grid():
    return GeometricGrid.from_log_span(-2.0, 2.0, 32)
