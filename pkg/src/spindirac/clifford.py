"""Clifford action of R^3 on 2-component complex spinors.

The representation is pinned to ``gamma_k = i * sigma_k`` (Pauli matrices),
so that ``gamma(v) @ gamma(v) == -|v|^2 I`` and every ``gamma_k`` is
skew-Hermitian.  All functions broadcast over leading axes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonOrthogonal

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

ORTHOGONALITY_TOL = 1e-10


@dataclass(frozen=True)
class CliffordRep:
    """Gamma matrices for the rank-3 Clifford algebra acting on C^2."""

    gammas: np.ndarray = field(repr=False)
    dim: int = 3

    def __post_init__(self):
        self.gammas.setflags(write=False)

    @property
    def volume_element(self):
        g = self.gammas
        return g[0] @ g[1] @ g[2]


def build_rep():
    return CliffordRep(gammas=1j * PAULI.copy())


def gamma(rep, v):
    """Clifford multiplication matrix of ``v``; shape ``(..., 2, 2)``."""
    v = np.asarray(v, dtype=float)
    return np.einsum("...a,abc->...bc", v, rep.gammas)


def gamma_surface(rep, X, N, tol=ORTHOGONALITY_TOL):
    """Induced surface Clifford action ``gamma(X) gamma(N)`` for tangent ``X``.

    Raises NonOrthogonal when ``|<X, N>| > tol * |X|``.
    """
    X = np.asarray(X, dtype=float)
    N = np.asarray(N, dtype=float)
    dot = np.abs(np.sum(X * N, axis=-1))
    if np.any(dot > tol * np.linalg.norm(X, axis=-1)):
        raise NonOrthogonal("tangent vector is not orthogonal to the normal")
    return gamma(rep, X) @ gamma(rep, N)


def apply(mat, psi):
    """Apply ``(..., 2, 2)`` matrices to ``(..., 2)`` spinors."""
    return np.einsum("...ij,...j->...i", mat, psi)


def inner(psi, phi):
    """Hermitian fiber product, linear in ``psi``; reduces the last axis."""
    return np.sum(psi * np.conj(phi), axis=-1)


def norm2(psi):
    return np.sum(np.abs(psi) ** 2, axis=-1)


def anticommutator_defect(rep, v, w):
    """``max |gamma(v)gamma(w) + gamma(w)gamma(v) + 2<v,w> I|``."""
    gv, gw = gamma(rep, v), gamma(rep, w)
    dot = np.sum(np.asarray(v) * np.asarray(w), axis=-1)
    lhs = gv @ gw + gw @ gv
    return float(np.max(np.abs(lhs + 2 * dot[..., None, None] * np.eye(2))))


def skew_adjoint_defect(rep, v, psi, phi):
    """``|<gamma(v)psi, phi> + <psi, gamma(v)phi>|``; zero for skew action."""
    g = gamma(rep, v)
    return float(np.max(np.abs(inner(apply(g, psi), phi) + inner(psi, apply(g, phi)))))
