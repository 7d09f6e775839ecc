"""Integral identities for spinors on the unit ball in flat R^3.

Spinor fields on the ball are C^2-valued functions with exact first
derivatives.  The boundary sphere carries the inner normal ``N = -x`` and
mean curvature ``H = 1``; the hypersurface Dirac operator is evaluated
through ``D psi = H psi - gamma(N) Dbar psi - d_N psi``.
"""

import json
from functools import lru_cache
from dataclasses import asdict, dataclass

import numpy as np

from .clifford import apply, build_rep, gamma, inner, norm2
from .errors import ZeroSpinor

AMBIENT_DIM = 3
SURFACE_DIM = AMBIENT_DIM - 1
MIN_RESOLUTION = 4


# ------------------------------------------------------------ field models


class SpinorFieldModel:
    """Smooth spinor field with exact derivatives.

    Subclasses provide ``value(x) -> (..., 2)`` and
    ``jacobian(x) -> (..., 3, 2)`` with ``jacobian[..., a, :] = d_a psi``.
    """

    family = "generic"

    def __init__(self, rep=None):
        self.rep = rep if rep is not None else build_rep()

    def value(self, x):
        raise NotImplementedError

    def jacobian(self, x):
        raise NotImplementedError

    def scaled(self, c):
        return _Scaled(self, c)


class _Scaled(SpinorFieldModel):
    def __init__(self, base, c):
        super().__init__(base.rep)
        self.base, self.c = base, complex(c)
        self.family = base.family

    def value(self, x):
        return self.c * self.base.value(x)

    def jacobian(self, x):
        return self.c * self.base.jacobian(x)


class TwistorFamilySpinor(SpinorFieldModel):
    """``psi(x) = phi0 + gamma(x) phi1``: a twistor spinor with constant
    ambient Dirac image ``-3 phi1``."""

    family = "twistor"

    def __init__(self, phi0, phi1, rep=None):
        super().__init__(rep)
        self.phi0 = np.asarray(phi0, dtype=complex)
        self.phi1 = np.asarray(phi1, dtype=complex)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.phi0 + apply(gamma(self.rep, x), np.broadcast_to(self.phi1, x.shape[:-1] + (2,)))

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        d = np.einsum("aij,j->ai", self.rep.gammas, self.phi1)
        return np.broadcast_to(d, x.shape[:-1] + (3, 2)).copy()


class RadialQuadraticSpinor(SpinorFieldModel):
    """``psi(x) = |x|^2 phi0``, which is not a twistor spinor."""

    family = "non-twistor"

    def __init__(self, phi0, rep=None):
        super().__init__(rep)
        self.phi0 = np.asarray(phi0, dtype=complex)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(x * x, axis=-1)[..., None] * self.phi0

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * x[..., :, None] * self.phi0


class PolynomialSpinor(SpinorFieldModel):
    """``psi(x) = c + sum_a x_a b_a + 1/2 sum_ab x_a x_b q_ab`` with
    ``q_ab = q_ba``; covers any spinor field up to second order."""

    family = "polynomial"

    def __init__(self, c, b, q, rep=None):
        super().__init__(rep)
        self.c = np.asarray(c, dtype=complex)
        self.b = np.asarray(b, dtype=complex)
        q = np.asarray(q, dtype=complex)
        self.q = 0.5 * (q + q.transpose(1, 0, 2))

    @classmethod
    def random(cls, rng, rep=None):
        def z(*shape):
            return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

        return cls(z(2), z(3, 2), z(3, 3, 2), rep=rep)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return (
            self.c
            + np.einsum("...a,ai->...i", x, self.b)
            + 0.5 * np.einsum("...a,...b,abi->...i", x, x, self.q)
        )

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return self.b + np.einsum("...b,abi->...ai", x, self.q)


def random_spinor(rng):
    return rng.standard_normal(2) + 1j * rng.standard_normal(2)


# ---------------------------------------------------- pointwise operators


def ambient_dirac(field, x):
    """``Dbar psi = sum_a gamma_a d_a psi``."""
    return np.tensordot(field.jacobian(x), field.rep.gammas, axes=([-2, -1], [0, 2]))


def twistor_part(field, x):
    """``Pbar_{e_a} psi = d_a psi + gamma_a Dbar psi / (n + 1)``, shape (..., 3, 2)."""
    Dpsi = ambient_dirac(field, x)
    return field.jacobian(x) + np.tensordot(Dpsi, field.rep.gammas, axes=([-1], [2])) / AMBIENT_DIM


def twistor_residual(field, points):
    """Largest twistor-operator component over the sample points."""
    P = twistor_part(field, np.atleast_2d(points))
    return float(np.max(np.sqrt(norm2(P))))


def decomposition_defect(field, points):
    """``max | |grad psi|^2 - |P psi|^2 - |Dbar psi|^2 / (n + 1) |``."""
    x = np.atleast_2d(points)
    grad2 = np.sum(norm2(field.jacobian(x)), axis=-1)
    p2 = np.sum(norm2(twistor_part(field, x)), axis=-1)
    d2 = norm2(ambient_dirac(field, x))
    return float(np.max(np.abs(grad2 - p2 - d2 / AMBIENT_DIM)))


def energy_momentum(field, x):
    """Energy-momentum tensor ``Q_ab = 1/2 Re<gamma_a d_b psi + gamma_b d_a psi, psi> / |psi|^2``.

    Undefined at zeros of ``psi``; raises ZeroSpinor there.
    """
    x = np.asarray(x, dtype=float)
    psi = field.value(x)
    n2 = norm2(psi)
    if np.any(n2 <= np.finfo(float).tiny):
        raise ZeroSpinor("energy-momentum tensor is undefined where psi = 0")
    return _emt_unnormalized(field, x, psi) / n2[..., None, None]


def _emt_unnormalized(field, x, psi):
    J = field.jacobian(x)
    # S[a, b] = Re <gamma_a d_b psi, psi>
    gJ = np.tensordot(J, field.rep.gammas, axes=([-1], [2]))  # (..., b, a, i)
    S = np.real(gJ @ np.conj(psi)[..., None, :, None])[..., 0].swapaxes(-1, -2)
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def emt_connection(field, x):
    """``d_a psi + gamma(Q e_a) psi`` for each frame direction, shape (..., 3, 2)."""
    x = np.asarray(x, dtype=float)
    Q = energy_momentum(field, x)
    psi = field.value(x)
    gQ = np.einsum("...ab,bij->...aij", Q, field.rep.gammas)
    return field.jacobian(x) + np.einsum("...aij,...j->...ai", gQ, psi)


def emt_identity_check(field, x):
    """Pointwise defect ``| |grad psi|^2 - |grad^Q psi|^2 - |Q|^2 |psi|^2 |``."""
    x = np.asarray(x, dtype=float)
    grad2 = np.sum(norm2(field.jacobian(x)), axis=-1)
    modified2 = np.sum(norm2(emt_connection(field, x)), axis=-1)
    Q = energy_momentum(field, x)
    q2 = np.sum(Q ** 2, axis=(-1, -2))
    return np.abs(grad2 - modified2 - q2 * norm2(field.value(x)))


# --------------------------------------------------------------- quadrature


@dataclass(frozen=True)
class BallQuadrature:
    """Product rule on the unit ball and its boundary sphere.

    Gauss-Legendre in ``cos(theta)`` and in the radius (weight ``r^2``),
    ``2n`` equispaced azimuths.  Exact for polynomials of degree
    ``< 2n`` in the Cartesian coordinates.
    """

    resolution: int
    volume_nodes: np.ndarray
    volume_weights: np.ndarray
    surface_nodes: np.ndarray
    surface_weights: np.ndarray

    @property
    def h(self):
        return 1.0 / self.resolution


@lru_cache(maxsize=16)
def _cached_quadrature(n):
    return _build_quadrature(n)


def ball_quadrature(resolution):
    """Cached :class:`BallQuadrature` at the given resolution."""
    return _cached_quadrature(int(resolution))


def _build_quadrature(n):
    if n < 1:
        raise ValueError("resolution must be >= 1")
    t, wt = np.polynomial.legendre.leggauss(n)
    phi = 2 * np.pi * (np.arange(2 * n) + 0.5) / (2 * n)
    wphi = np.full(2 * n, 2 * np.pi / (2 * n))
    T, P = np.meshgrid(t, phi, indexing="ij")
    s = np.sqrt(1 - T ** 2)
    S_nodes = np.stack([s * np.cos(P), s * np.sin(P), T], axis=-1).reshape(-1, 3)
    S_w = np.outer(wt, wphi).ravel()

    # one extra radial node absorbs the r^2 Jacobian
    g, wg = np.polynomial.legendre.leggauss(n + 1)
    r = 0.5 * (g + 1)
    wr = 0.5 * wg * r ** 2
    V_nodes = (r[:, None, None] * S_nodes[None]).reshape(-1, 3)
    V_w = np.outer(wr, S_w).ravel()
    for a in (V_nodes, V_w, S_nodes, S_w):
        a.setflags(write=False)
    return BallQuadrature(n, V_nodes, V_w, S_nodes, S_w)


# ----------------------------------------------------------- the integrals


def _scalar(R, x):
    if callable(R):
        return np.asarray(R(x), dtype=float)
    return np.full(len(x), float(R))


def surface_integrand(field, x):
    """``Re<D psi, psi> - (n/2) H |psi|^2`` on the unit sphere."""
    x = np.asarray(x, dtype=float)
    N = -x
    psi = field.value(x)
    Dbar = ambient_dirac(field, x)
    dN = np.einsum("...a,...ai->...i", N, field.jacobian(x))
    extra = -apply(gamma(field.rep, N), Dbar) - dN
    # D psi = (n/2) H psi + extra, so the H terms cancel
    return np.real(inner(extra, psi))


def lhs_surface(field, quad):
    """Boundary side ``int_S (<D psi, psi> - (n/2) H |psi|^2)``."""
    return float(surface_integrand(field, quad.surface_nodes) @ quad.surface_weights)


def volume_integrals(field, quad, scalar_curvature=0.0):
    """Volume integrals of ``|psi|^2``, ``Rbar |psi|^2``, ``|grad psi|^2``,
    ``|Dbar psi|^2``, ``|P psi|^2`` and ``|Q|^2 |psi|^2`` in one pass."""
    x = quad.volume_nodes
    psi = field.value(x)
    J = field.jacobian(x)
    D = np.tensordot(J, field.rep.gammas, axes=([-2, -1], [0, 2]))
    P = J + np.tensordot(D, field.rep.gammas, axes=([-1], [2])) / AMBIENT_DIM
    psi2 = norm2(psi)
    S = _emt_unnormalized(field, x, psi)
    # Q is undefined at zeros of psi, where |Q|^2 |psi|^2 is taken as 0
    q2psi2 = np.where(psi2 > 0, np.sum(S ** 2, axis=(-1, -2)) / np.where(psi2 > 0, psi2, 1.0), 0.0)
    w = quad.volume_weights
    return {
        "psi2": float(psi2 @ w),
        "curvature": float((_scalar(scalar_curvature, x) * psi2) @ w),
        "grad2": float(np.sum(norm2(J), axis=-1) @ w),
        "dirac2": float(norm2(D) @ w),
        "twistor2": float(np.sum(norm2(P), axis=-1) @ w),
        "emt2": float(q2psi2 @ w),
    }


def _rhs(t):
    return 0.25 * t["curvature"] - SURFACE_DIM / AMBIENT_DIM * t["dirac2"] + t["twistor2"]


def _twistor_bound(t):
    return 0.25 * t["curvature"] - SURFACE_DIM / AMBIENT_DIM * t["dirac2"]


def _emt_bound(t):
    return 0.25 * t["curvature"] + t["emt2"] - t["dirac2"]


def rhs_volume(field, quad, scalar_curvature=0.0):
    """``(1/4) int Rbar |psi|^2 - n/(n+1) int |Dbar psi|^2 + int |P psi|^2``."""
    return _rhs(volume_integrals(field, quad, scalar_curvature))


def weitzenbock_rhs(field, quad, scalar_curvature=0.0):
    """``int (|grad psi|^2 - |Dbar psi|^2 + (1/4) Rbar |psi|^2)``."""
    t = volume_integrals(field, quad, scalar_curvature)
    return t["grad2"] - t["dirac2"] + 0.25 * t["curvature"]


def twistor_bound(field, quad, scalar_curvature=0.0):
    """Right side of the Reilly-type inequality (twistor term dropped)."""
    return _twistor_bound(volume_integrals(field, quad, scalar_curvature))


def emt_bound(field, quad, scalar_curvature=0.0):
    """``int ((Rbar/4 + |Q|^2) |psi|^2 - |Dbar psi|^2)``."""
    return _emt_bound(volume_integrals(field, quad, scalar_curvature))


# ------------------------------------------------------------ verification


@dataclass
class VerificationRecord:
    family: str
    lhs: float
    rhs: float
    defect: float
    resolution: int
    converged: bool
    inequality_rhs: float = None
    inequality_margin: float = None
    emt_rhs: float = None
    emt_margin: float = None

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def verify(field, resolution, scalar_curvature=0.0, rtol=1e-6):
    """Evaluate both sides of the twistor identity and the two inequalities.

    ``converged`` compares against the rule at half the resolution.
    """
    q = ball_quadrature(resolution)
    lhs = lhs_surface(field, q)
    t = volume_integrals(field, q, scalar_curvature)
    rhs, tw, em = _rhs(t), _twistor_bound(t), _emt_bound(t)
    coarse = ball_quadrature(max(1, resolution // 2))
    lhs_c = lhs_surface(field, coarse)
    rhs_c = rhs_volume(field, coarse, scalar_curvature)
    converged = max(abs(lhs - lhs_c), abs(rhs - rhs_c)) <= rtol * (abs(rhs) + 1.0)
    return VerificationRecord(
        family=field.family,
        lhs=lhs,
        rhs=rhs,
        defect=abs(lhs - rhs) / (abs(rhs) + 1.0),
        resolution=int(resolution),
        converged=bool(converged),
        inequality_rhs=tw,
        inequality_margin=lhs - tw,
        emt_rhs=em,
        emt_margin=lhs - em,
    )
