import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spindirac.clifford import (
    anticommutator_defect,
    apply,
    build_rep,
    gamma,
    gamma_surface,
    inner,
    norm2,
    skew_adjoint_defect,
)
from spindirac.errors import NonOrthogonal

TOL = 1e-12
I2 = np.eye(2)

vectors = arrays(np.float64, (3,), elements=st.floats(-10, 10, allow_nan=False))
spinors = arrays(np.complex128, (2,), elements=st.complex_numbers(max_magnitude=10, allow_nan=False))


def _orthonormal_pair(v, w):
    """Gram-Schmidt oracle, independent of the package."""
    n = v / np.linalg.norm(v)
    x = w - np.dot(w, n) * n
    return x, n


def test_rep_basic_identities():
    g = build_rep().gammas
    assert np.allclose(g[0] @ g[0], -I2, atol=TOL)
    assert np.allclose(g[0] @ g[1], -g[1] @ g[0], atol=TOL)
    for j in range(3):
        assert np.allclose(g[j].conj().T, -g[j], atol=TOL)
        for k in range(3):
            assert np.allclose(g[j] @ g[k] + g[k] @ g[j], -2 * (j == k) * I2, atol=TOL)


def test_volume_element_is_unit_scalar():
    rep = build_rep()
    # direct 2x2 product of i*Pauli: i^3 * (i I) = 1
    omega = rep.volume_element
    c = omega[0, 0]
    assert np.allclose(omega, c * I2, atol=TOL)
    assert abs(abs(c) - 1) < TOL
    assert np.isclose(c, 1.0)


def test_rep_is_immutable():
    rep = build_rep()
    with pytest.raises(ValueError):
        rep.gammas[0, 0, 0] = 0


def test_gamma_zero_and_linear():
    rep = build_rep()
    assert np.all(gamma(rep, np.zeros(3)) == 0)
    v, w = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.1, 4.0])
    assert np.allclose(gamma(rep, 2 * v - w), 2 * gamma(rep, v) - gamma(rep, w), atol=TOL)


def test_gamma_broadcasts():
    rep = build_rep()
    V = np.random.default_rng(0).standard_normal((4, 5, 3))
    G = gamma(rep, V)
    assert G.shape == (4, 5, 2, 2)
    assert np.allclose(G[2, 3], gamma(rep, V[2, 3]))


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_gamma_square(v):
    rep = build_rep()
    g = gamma(rep, v)
    scale = max(1.0, np.dot(v, v))
    assert np.allclose(g @ g, -np.dot(v, v) * I2, atol=TOL * scale)
    assert np.allclose(g.conj().T, -g, atol=TOL * scale)


@settings(max_examples=200, deadline=None)
@given(vectors, vectors)
def test_polarized_anticommutator(v, w):
    rep = build_rep()
    scale = max(1.0, np.linalg.norm(v) * np.linalg.norm(w))
    assert anticommutator_defect(rep, v, w) < TOL * scale


@settings(max_examples=200, deadline=None)
@given(vectors, spinors, spinors)
def test_skew_adjoint(v, psi, phi):
    rep = build_rep()
    scale = max(1.0, np.linalg.norm(v) * np.linalg.norm(psi) * np.linalg.norm(phi))
    assert skew_adjoint_defect(rep, v, psi, phi) < TOL * scale


def test_gamma_surface_examples():
    rep = build_rep()
    g = rep.gammas
    e1, e3 = np.eye(3)[0], np.eye(3)[2]
    s = gamma_surface(rep, e1, e3)
    assert np.allclose(s, g[0] @ g[2], atol=TOL)
    assert np.allclose(s @ s, -I2, atol=TOL)
    assert np.all(gamma_surface(rep, np.zeros(3), e3) == 0)


def test_gamma_surface_rejects_non_tangent():
    rep = build_rep()
    with pytest.raises(NonOrthogonal):
        gamma_surface(rep, np.array([1.0, 0.0, 1e-6]), np.array([0.0, 0.0, 1.0]))
    # within the relative tolerance
    gamma_surface(rep, np.array([1.0, 0.0, 1e-12]), np.array([0.0, 0.0, 1.0]))


@settings(max_examples=200, deadline=None)
@given(vectors, vectors)
def test_normal_conjugation_identities(v, w):
    if np.linalg.norm(v) < 1e-3 or np.linalg.norm(np.cross(v, w)) < 1e-3:
        return
    rep = build_rep()
    X, N = _orthonormal_pair(v, w)
    gN, gX = gamma(rep, N), gamma(rep, X)
    scale = max(1.0, np.dot(X, X))
    # gamma(N) gamma(X) gamma(N) = gamma(X) for X orthogonal to unit N
    assert np.allclose(gN @ gX @ gN, gX, atol=TOL * scale)
    gs = gamma_surface(rep, X, N, tol=1e-9)
    assert np.allclose(gs @ gs, -np.dot(X, X) * I2, atol=TOL * scale)
    # surface action anticommutes with gamma(N); this is what makes D odd
    assert np.allclose(gN @ gs, -gs @ gN, atol=TOL * scale)
    assert np.allclose(gN @ gN, -I2, atol=TOL)


@settings(max_examples=100, deadline=None)
@given(vectors)
def test_tangent_rotation_identity(v):
    if np.linalg.norm(v) < 1e-3:
        return
    rep = build_rep()
    n = v / np.linalg.norm(v)
    e = np.cross(n, [0.3, -0.7, 0.2])
    if np.linalg.norm(e) < 1e-3:
        return
    # gamma(n) gamma(n x e) = gamma(e) for e orthogonal to unit n
    assert np.allclose(gamma(rep, n) @ gamma(rep, np.cross(n, e)), gamma(rep, e), atol=1e-11)


def test_fiber_product():
    psi = np.array([1 + 2j, -1j])
    phi = np.array([0.5, 2 - 1j])
    assert np.isclose(inner(psi, phi), np.vdot(phi, psi))
    assert np.isclose(inner(1j * psi, phi), 1j * inner(psi, phi))
    assert norm2(psi) == pytest.approx(6.0)
    assert norm2(np.zeros(2)) == 0


def test_apply_matches_matmul():
    rep = build_rep()
    rng = np.random.default_rng(3)
    M = gamma(rep, rng.standard_normal((7, 3)))
    psi = rng.standard_normal((7, 2)) + 1j * rng.standard_normal((7, 2))
    assert np.allclose(apply(M, psi), np.stack([M[i] @ psi[i] for i in range(7)]))
