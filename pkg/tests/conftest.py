import sys

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import HealthCheck, settings

from gaussk.kahler import std_symplectic
from gaussk.states import pure_state

settings.register_profile(
    "gaussk",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("gaussk")


def boson_G(rho, phi=0.0):
    """Single-mode covariance parametrized by polar squeezing coordinates."""
    c, s = np.cosh(rho), np.sinh(rho)
    return np.array([[c + np.cos(phi) * s, np.sin(phi) * s], [np.sin(phi) * s, c - np.cos(phi) * s]])


def boson_J(rho, phi=0.0):
    c, s = np.cosh(rho), np.sinh(rho)
    return np.array(
        [[-np.sin(phi) * s, np.cos(phi) * s + c], [np.cos(phi) * s - c, np.sin(phi) * s]]
    )


def two_mode_squeezed(r):
    """Boson pair with q1 q2 / p1 p2 correlations of strength r."""
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    G = np.array([[c, s, 0, 0], [s, c, 0, 0], [0, 0, c, -s], [0, 0, -s, c]])
    J = -G @ np.linalg.inv(std_symplectic(2))
    return pure_state("boson", J)


def fermion_pair_omega(theta, phi=0.0, sign=1):
    """Covariance of cos(theta/2)|00> + e^{i phi} sin(theta/2)|11> (sign=+1)."""
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    g = sign
    return np.array(
        [
            [0, -g * st * sp, g * ct, g * st * cp],
            [g * st * sp, 0, -st * cp, ct],
            [-g * ct, st * cp, 0, st * sp],
            [-g * st * cp, -ct, -st * sp, 0],
        ]
    )


def fermion_pair(theta, phi=0.0, sign=1):
    # with G = 1 the complex structure equals the covariance
    return pure_state("fermion", fermion_pair_omega(theta, phi, sign))


def fermion_instance():
    n = 6
    A = np.array([[(i - j) / (i + j + 1) for j in range(n)] for i in range(n)])
    M = sla.expm(0.9 * A)
    return pure_state("fermion", M @ std_symplectic(3) @ M.T)


def boson_instance():
    A = np.array([[0.3, 0.1], [0.1, -0.2]])
    B = np.array([[0.2, -0.1], [-0.1, 0.25]])
    M = sla.expm(0.8 * np.block([[A, B], [B, -A]]))
    return pure_state("boson", M @ std_symplectic(2) @ np.linalg.inv(M), [0.2, -0.1, 0.05, 0.3])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
