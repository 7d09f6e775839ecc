from functools import lru_cache

import numpy as np
import pytest

from spindirac.clifford import build_rep
from spindirac.dirac import assemble, spectrum
from spindirac.mesh import curvature, make_ellipsoid, make_sphere, make_torus

REP = build_rep()


@lru_cache(maxsize=None)
def mesh_of(kind, *params):
    factory = {"sphere": make_sphere, "ellipsoid": make_ellipsoid, "torus": make_torus}[kind]
    return factory(*params)


@lru_cache(maxsize=None)
def curv_of(kind, *params):
    return curvature(mesh_of(kind, *params))


@lru_cache(maxsize=None)
def operator_of(kind, *params):
    return assemble(mesh_of(kind, *params), REP, curv_of(kind, *params))


@lru_cache(maxsize=None)
def spectrum_of(kind, *params, k=12):
    return spectrum(operator_of(kind, *params), k)


# (coarse, fine) pairs used wherever a refinement step is needed
LADDERS = {
    "sphere r=1": [("sphere", 1.0, 3), ("sphere", 1.0, 4), ("sphere", 1.0, 5)],
    "sphere r=2": [("sphere", 2.0, 3), ("sphere", 2.0, 4)],
    "ellipsoid": [("ellipsoid", 1.0, 1.0, 1.5, 3), ("ellipsoid", 1.0, 1.0, 1.5, 4)],
    "torus": [("torus", 2.0, 0.5, 48, 24), ("torus", 2.0, 0.5, 96, 48)],
}

TEST_MESHES = [
    ("sphere", 1.0, 3),
    ("sphere", 2.0, 3),
    ("ellipsoid", 1.0, 1.0, 1.5, 3),
    ("torus", 2.0, 0.5, 48, 24),
]


@pytest.fixture(scope="session")
def rep():
    return REP


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_spinors(rng, *shape):
    return rng.standard_normal(shape + (2,)) + 1j * rng.standard_normal(shape + (2,))
