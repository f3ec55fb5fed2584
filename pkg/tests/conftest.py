import numpy as np
import pytest

from finslerflow import FinslerStructure
from finslerflow.sampling import grid_samples, random_samples

SPHERE_F2 = "4*(y1^2 + y2^2) / (1 + x1^2 + x2^2)^2"
RANDERS_F2 = "(sqrt(4*(y1^2 + y2^2) / (1 + x1^2 + x2^2)^2) + 0.1*y1)^2"


@pytest.fixture(scope="session")
def euclid():
    return FinslerStructure(2, "y1^2 + y2^2", name="euclid")


@pytest.fixture(scope="session")
def euclid3():
    return FinslerStructure(3, "y1^2 + y2^2 + y3^2", name="euclid3")


@pytest.fixture(scope="session")
def sphere():
    return FinslerStructure(2, SPHERE_F2, name="sphere")


@pytest.fixture(scope="session")
def randers():
    return FinslerStructure(2, RANDERS_F2, name="randers")


@pytest.fixture(scope="session")
def sphere_samples(sphere):
    return random_samples(2, 30, seed=3, structure=sphere)


@pytest.fixture(scope="session")
def grid2(euclid):
    return grid_samples(2, box=1.0, points_per_axis=3, directions=8)


def assert_close(a, b, tol, label=""):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    err = float(np.max(np.abs(a - b))) if a.size else 0.0
    assert err <= tol, f"{label} max deviation {err:.3e} exceeds {tol:.0e}"
