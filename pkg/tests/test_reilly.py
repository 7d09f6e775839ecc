import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from spindirac.errors import ZeroSpinor
from spindirac.reilly import (
    PolynomialSpinor,
    RadialQuadraticSpinor,
    TwistorFamilySpinor,
    ambient_dirac,
    ball_quadrature,
    decomposition_defect,
    emt_bound,
    emt_identity_check,
    energy_momentum,
    lhs_surface,
    rhs_volume,
    twistor_bound,
    twistor_residual,
    verify,
    weitzenbock_rhs,
)

Q32 = ball_quadrature(32)
# integrands of second-order fields have degree <= 4, integrated exactly here
Q8 = ball_quadrature(8)
seeds = st.integers(0, 2 ** 32 - 1)

# independent Clifford matrices for the oracle
_G = 1j * np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def surface_oracle(phi0, phi1):
    """Boundary integral for phi0 + gamma(x) phi1 by adaptive scipy quadrature.

    On the unit sphere with N = -x: D psi - H psi = -gamma(N)(-3 phi1) - gamma(N) phi1
    = -2 gamma(x) phi1.
    """
    def f(theta, ph):
        x = np.array([np.sin(theta) * np.cos(ph), np.sin(theta) * np.sin(ph), np.cos(theta)])
        gx = np.tensordot(x, _G, axes=1)
        psi = phi0 + gx @ phi1
        extra = -2 * gx @ phi1
        return np.real(np.vdot(psi, extra)) * np.sin(theta)

    val, _ = integrate.dblquad(f, 0, 2 * np.pi, 0, np.pi, epsabs=1e-11, epsrel=1e-11)
    return val


def random_spinor(rng):
    return rng.standard_normal(2) + 1j * rng.standard_normal(2)


# --------------------------------------------------------------- quadrature


@pytest.mark.parametrize("n", [1, 4, 16, 32])
def test_quadrature_weights(n):
    q = ball_quadrature(n)
    assert q.volume_weights.sum() == pytest.approx(4 * np.pi / 3, rel=1e-13)
    assert q.surface_weights.sum() == pytest.approx(4 * np.pi, rel=1e-13)
    assert np.allclose(np.linalg.norm(q.surface_nodes, axis=1), 1.0)
    assert np.all(np.linalg.norm(q.volume_nodes, axis=1) < 1.0)


def test_quadrature_polynomial_exactness():
    q = ball_quadrature(8)
    x, w = q.volume_nodes, q.volume_weights
    assert np.sum(w * np.sum(x ** 2, axis=1)) == pytest.approx(4 * np.pi / 5, rel=1e-13)
    assert np.sum(w * x[:, 0] ** 2 * x[:, 1] ** 2) == pytest.approx(4 * np.pi / 105, rel=1e-12)
    y, v = q.surface_nodes, q.surface_weights
    assert np.sum(v * y[:, 2] ** 4) == pytest.approx(4 * np.pi / 5, rel=1e-13)
    assert abs(np.sum(v * y[:, 0] * y[:, 1] ** 2)) < 1e-13


def test_quadrature_is_cached_and_read_only():
    assert ball_quadrature(32) is Q32
    with pytest.raises(ValueError):
        Q32.volume_weights[0] = 0
    with pytest.raises(ValueError):
        ball_quadrature(0)


# ------------------------------------------------------------ twistor family


def test_family_derivatives():
    rng = np.random.default_rng(0)
    f = TwistorFamilySpinor(random_spinor(rng), random_spinor(rng))
    x = rng.standard_normal((5, 3))
    J = f.jacobian(x)
    for a in range(3):
        assert np.allclose(J[:, a], _G[a] @ f.phi1)
    assert np.allclose(ambient_dirac(f, x), -3 * f.phi1)
    # finite-difference check of the exact jacobian
    h = 1e-6
    fd = (f.value(x + h * np.eye(3)[1]) - f.value(x - h * np.eye(3)[1])) / (2 * h)
    assert np.allclose(fd, J[:, 1], atol=1e-8)


def test_lhs_examples():
    rng = np.random.default_rng(1)
    phi0 = random_spinor(rng)
    assert lhs_surface(TwistorFamilySpinor(phi0, np.zeros(2)), Q32) == pytest.approx(0, abs=1e-12)
    unit = np.array([0.6, 0.8j])
    assert lhs_surface(TwistorFamilySpinor(np.zeros(2), unit), Q32) == pytest.approx(-8 * np.pi, rel=1e-12)
    f = TwistorFamilySpinor(phi0, random_spinor(rng))
    c = 1.5 - 2j
    assert lhs_surface(f.scaled(c), Q32) == pytest.approx(abs(c) ** 2 * lhs_surface(f, Q32), rel=1e-12)


def test_lhs_against_adaptive_oracle():
    rng = np.random.default_rng(2)
    phi0, phi1 = random_spinor(rng), random_spinor(rng)
    got = lhs_surface(TwistorFamilySpinor(phi0, phi1), Q32)
    assert got == pytest.approx(surface_oracle(phi0, phi1), rel=1e-9)


def test_rhs_examples():
    rng = np.random.default_rng(3)
    assert rhs_volume(TwistorFamilySpinor(random_spinor(rng), np.zeros(2)), Q32) == pytest.approx(0, abs=1e-12)
    unit = np.array([0.0, 1.0])
    # constant integrand -(2/3) 9 |phi1|^2 over the ball volume
    assert rhs_volume(TwistorFamilySpinor(np.zeros(2), unit), Q32) == pytest.approx(-6 * 4 * np.pi / 3, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_twistor_identity(seed):
    rng = np.random.default_rng(seed)
    f = TwistorFamilySpinor(random_spinor(rng), random_spinor(rng))
    lhs, rhs = lhs_surface(f, Q32), rhs_volume(f, Q32)
    assert abs(lhs - rhs) / (abs(rhs) + 1) < 1e-12
    assert rhs == pytest.approx(-8 * np.pi * np.sum(np.abs(f.phi1) ** 2), rel=1e-12)
    # the twistor term vanishes, so the inequality is an equality
    assert twistor_bound(f, Q32) == pytest.approx(rhs, rel=1e-12)


def test_twistor_residual():
    rng = np.random.default_rng(4)
    pts = rng.uniform(-1, 1, (200, 3))
    f = TwistorFamilySpinor(random_spinor(rng), random_spinor(rng))
    assert twistor_residual(f, pts) < 1e-12
    g = RadialQuadraticSpinor(random_spinor(rng))
    assert twistor_residual(g, pts) > 0.1
    par = TwistorFamilySpinor(random_spinor(rng), np.zeros(2))
    assert twistor_residual(par, pts) == 0
    assert decomposition_defect(par, pts) == 0


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_decomposition_for_general_fields(seed):
    rng = np.random.default_rng(seed)
    f = PolynomialSpinor.random(rng)
    assert decomposition_defect(f, rng.uniform(-1, 1, (50, 3))) < 1e-10


# ----------------------------------------------------------------- identity


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_reilly_identity_general_fields(seed):
    # the identity holds for every spinor field, not only twistor ones
    f = PolynomialSpinor.random(np.random.default_rng(seed))
    lhs = lhs_surface(f, Q8)
    assert abs(lhs - rhs_volume(f, Q8)) / (abs(lhs) + 1) < 1e-10
    assert abs(lhs - weitzenbock_rhs(f, Q8)) / (abs(lhs) + 1) < 1e-10
    assert lhs >= twistor_bound(f, Q8) - 1e-10
    assert lhs >= emt_bound(f, Q8) - 1e-10


def test_scalar_curvature_term_is_carried():
    rng = np.random.default_rng(5)
    f = PolynomialSpinor.random(rng)
    x, w = Q32.volume_nodes, Q32.volume_weights
    psi2 = np.sum(np.abs(f.value(x)) ** 2, axis=1) @ w
    assert rhs_volume(f, Q32, 2.0) - rhs_volume(f, Q32) == pytest.approx(0.5 * psi2, rel=1e-12)
    varying = rhs_volume(f, Q32, lambda p: p[:, 0] ** 2)
    assert varying != rhs_volume(f, Q32)


def test_non_twistor_strictness():
    rng = np.random.default_rng(6)
    phi0 = random_spinor(rng)
    f = RadialQuadraticSpinor(phi0)
    # closed form: margin = int |P psi|^2 = (2/3) 4 int |x|^2 |phi0|^2 = 32 pi / 15 |phi0|^2
    expected = 32 * np.pi / 15 * np.sum(np.abs(phi0) ** 2)
    margins = []
    for n in (4, 8, 16, 32):
        q = ball_quadrature(n)
        margins.append(lhs_surface(f, q) - twistor_bound(f, q))
    assert np.allclose(margins, expected, rtol=1e-12)
    assert min(margins) > 0
    assert lhs_surface(f, Q32) == pytest.approx(0, abs=1e-12)
    assert lhs_surface(f, Q32) >= emt_bound(f, Q32)


# -------------------------------------------------------- energy-momentum


def test_emt_parallel_spinor():
    f = TwistorFamilySpinor([1.0, 2j], np.zeros(2))
    x = np.random.default_rng(7).standard_normal((10, 3))
    assert np.all(energy_momentum(f, x) == 0)
    assert np.all(emt_identity_check(f, x) == 0)


def test_emt_scale_invariance_and_symmetry():
    rng = np.random.default_rng(8)
    f = PolynomialSpinor.random(rng)
    x = rng.standard_normal((10, 3))
    Q = energy_momentum(f, x)
    assert np.allclose(Q, np.swapaxes(Q, 1, 2))
    assert np.allclose(energy_momentum(f.scaled(-3 + 0.5j), x), Q, rtol=1e-12, atol=1e-14)


def test_emt_zero_spinor():
    f = RadialQuadraticSpinor([1.0, 0.0])
    with pytest.raises(ZeroSpinor):
        emt_identity_check(f, np.zeros(3))


@settings(max_examples=100, deadline=None)
@given(seeds, st.sampled_from(["twistor", "polynomial"]))
def test_emt_identity(seed, family):
    rng = np.random.default_rng(seed)
    if family == "twistor":
        f = TwistorFamilySpinor(random_spinor(rng), random_spinor(rng))
    else:
        f = PolynomialSpinor.random(rng)
    x = rng.uniform(-1, 1, 3)
    scale = np.sum(np.abs(f.jacobian(x)) ** 2)
    assert emt_identity_check(f, x) < 1e-10 * max(1.0, scale)


# ------------------------------------------------------------------ record


def test_verification_record():
    rng = np.random.default_rng(9)
    rec = verify(TwistorFamilySpinor(random_spinor(rng), random_spinor(rng)), 32)
    d = json.loads(rec.to_json())
    assert {"family", "lhs", "rhs", "defect", "resolution", "converged"} <= d.keys()
    assert d["family"] == "twistor"
    assert d["converged"] is True
    assert d["defect"] < 1e-6
    assert abs(d["inequality_margin"]) < 1e-9
