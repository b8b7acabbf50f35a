import numpy as np
import pytest

from src.algorithms.oracle import ray_critical_scan
from src.discrete_system.config import DESK_DIRECTION, DESK_LEVEL
from src.discrete_system.functional import find_ray_geometry
from src.discrete_system.models import FunctionalKind, FunctionalSpec, PeriodicSequence
from src.discrete_system.potentials import cosine_mu_potential


# the desk instance: g = x^2 + cos x - 1, a = 2.5, K = 1, rho = 0, M = 6
@pytest.fixture
def desk_potential():
    return cosine_mu_potential(a=2.5, mu=1.0, K=1.0, period=6)


@pytest.fixture
def desk_functional(desk_potential):
    return FunctionalSpec(FunctionalKind.STANDARD, desk_potential)


@pytest.fixture
def desk_direction():
    return PeriodicSequence(DESK_DIRECTION)


@pytest.fixture
def desk_geometry(desk_functional, desk_direction):
    return find_ray_geometry(desk_functional, desk_direction, DESK_LEVEL)


# amplitude A of the nontrivial ray solution, sin A = 0.8 A
@pytest.fixture
def desk_amplitude(desk_potential, desk_direction):
    return max(ray_critical_scan(desk_potential, desk_direction))


@pytest.fixture
def desk_solution(desk_direction, desk_amplitude):
    return desk_amplitude * desk_direction


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
