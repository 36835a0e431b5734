import math

import numpy as np
import pytest

from cvthermo.gaussian import TwoModeCovariance, euler_symplectic


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_euler(rng, s_max=1.5):
    return euler_symplectic(rng.uniform(0, 2 * np.pi), rng.uniform(-s_max, s_max), rng.uniform(0, 2 * np.pi))


def two_mode_squeezer(r):
    z = np.diag([1.0, -1.0])
    return np.block([[math.cosh(r) * np.eye(2), math.sinh(r) * z], [math.sinh(r) * z, math.cosh(r) * np.eye(2)]])


def beam_splitter(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.block([[c * np.eye(2), s * np.eye(2)], [-s * np.eye(2), c * np.eye(2)]])


def local(s_a, s_b):
    out = np.zeros((4, 4))
    out[:2, :2] = s_a
    out[2:, 2:] = s_b
    return out


def random_physical_state(rng):
    """Thermal product pushed through a random Sp(4,R) element."""
    nu1, nu2 = rng.uniform(0.5, 3.0, size=2)
    sigma = np.diag([nu1, nu1, nu2, nu2])
    s = (
        local(random_euler(rng, 1.0), random_euler(rng, 1.0))
        @ beam_splitter(rng.uniform(0, np.pi))
        @ two_mode_squeezer(rng.uniform(0, 1.5))
        @ local(random_euler(rng, 1.0), random_euler(rng, 1.0))
    )
    m = s @ sigma @ s.T
    return TwoModeCovariance((m + m.T) / 2)
