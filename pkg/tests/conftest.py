import numpy as np
import pytest

from morawetz_lab.fields import builtin_potential
from morawetz_lab.geometry import make_obstacle
from morawetz_lab.quadrature import build_shell_grid

ANGULAR = "1 + x1/(4*r) + I*x3/(5*r)"


@pytest.fixture(scope="session")
def ball():
    return make_obstacle({"shape": "ball", "center": [0, 0, 0], "radius": 1})


@pytest.fixture(scope="session")
def bumpy():
    return make_obstacle({"shape": "radial_graph", "center": [0, 0, 0],
                          "rho": "1 + cos(theta)**2/5"})


@pytest.fixture(scope="session")
def coarse_grid(ball):
    return build_shell_grid(ball, m_radial=24, angular_order=8)


@pytest.fixture(scope="session")
def grid(ball):
    return build_shell_grid(ball)


@pytest.fixture(scope="session")
def zero():
    return builtin_potential("zero")


@pytest.fixture(scope="session")
def example1():
    return builtin_potential("example1")


@pytest.fixture(scope="session")
def bumps():
    return builtin_potential("bump_A", [0.3, 3, 1]).with_V_from(builtin_potential("bump_V", [0.5, 3, 1]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
