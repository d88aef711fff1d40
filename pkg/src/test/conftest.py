"""
Shared fixtures: gallery systems and the approximations several tests reuse
"""
import logging

import pytest

from src.main.python.services.attractor_service import attractor_service
from src.main.python.services.boundary_service import boundary_service
from src.main.python.utils.gallery import gallery

logging.getLogger("src.main.python").setLevel(logging.WARNING)


@pytest.fixture(scope="session")
def koch():
    return gallery("koch").ifs


@pytest.fixture(scope="session")
def square4():
    return gallery("square4").ifs


@pytest.fixture(scope="session")
def square4_rotated():
    return gallery("square4-rotated").ifs


@pytest.fixture(scope="session")
def cantor2():
    return gallery("cantor2").ifs


@pytest.fixture(scope="session")
def segment2():
    return gallery("segment2").ifs


@pytest.fixture(scope="session")
def sierpinski():
    return gallery("sierpinski").ifs


@pytest.fixture(scope="session")
def l1_schief():
    return gallery("l1-schief").ifs


@pytest.fixture(scope="session")
def koch_approx8(koch):
    return attractor_service.approximate(koch, 8)


@pytest.fixture(scope="session")
def koch_boundary8(koch, koch_approx8):
    return boundary_service.similarity_boundary(koch, 8, approx=koch_approx8)


@pytest.fixture(scope="session")
def l1_approx8(l1_schief):
    return attractor_service.approximate(l1_schief, 8)


@pytest.fixture(scope="session")
def square4_approx6(square4):
    return attractor_service.approximate(square4, 6)
