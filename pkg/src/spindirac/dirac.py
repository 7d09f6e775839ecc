"""Discrete hypersurface Dirac operator on vertex spinors.

Ambient spinors on flat R^3 are C^2-valued functions, and on a surface with
inner normal N the induced Dirac operator reads

    D psi = H psi - gamma(N) sum_j gamma(e_j) d_{e_j} psi.

Spinors are piecewise linear over the mesh.  Two discrete objects are
assembled:

* ``D_int = D_ext + diag(H) M``: the Galerkin matrix of D against the lumped
  mass ``M``.  ``D_ext`` is the extrinsic part; on a face with outward
  winding its vertex couplings reduce to ``gamma(e_opp) / 6`` where
  ``e_opp`` is the edge opposite the column vertex, so constant spinors are
  annihilated exactly.
* ``energy``: the face-wise quadratic form ``int |D psi|^2`` (gradients
  are exact per face, three-point edge-midpoint rule).  It is a conforming,
  coercive discretization of D^2 and carries no doubled modes.

A centred first-order stencil on collocated vertices has spurious
near-zero modes (the fermion-doubling obstruction), so the Galerkin pencil
alone cannot be eigensolved for the low spectrum.  ``spectrum`` therefore
resolves the low-energy subspace of ``(energy, M)`` and performs a
Rayleigh-Ritz step for ``D_int`` on it.
"""

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse import linalg as sla

from . import __version__
from .clifford import apply, gamma
from .errors import CurvatureMismatch, IncompleteBasis, SolverFailure

SCHEMA_VERSION = 1
DENSE_LIMIT = 4000
SOLVER_RTOL = 1e-8
CLUSTER_RTOL = 1e-6


@dataclass(frozen=True)
class DiracOperator:
    """Assembled operator pair over vertex spinors (complex dim ``2V``).

    Vectors are flattened with the spinor index fastest, so
    ``psi.reshape(-1, 2)[i]`` is the spinor at vertex ``i``.
    """

    mesh_id: str
    mesh_name: str
    D_ext: sparse.csr_matrix = field(repr=False)
    D_int: sparse.csr_matrix = field(repr=False)
    energy: sparse.csr_matrix = field(repr=False)
    mass: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    symmetrization_defect: float = 0.0

    @property
    def dim(self):
        return len(self.mass)

    @property
    def n_vertices(self):
        return len(self.mass) // 2

    @property
    def H_mul(self):
        return sparse.diags(np.repeat(self.H, 2) * self.mass)

    @property
    def M(self):
        return sparse.diags(self.mass)


def _block_matrix(rows, cols, blocks, n):
    """Sparse ``2n x 2n`` matrix from 2x2 blocks at vertex positions."""
    r, c, v = [], [], []
    for p in range(2):
        for q in range(2):
            r.append(2 * rows + p)
            c.append(2 * cols + q)
            v.append(blocks[:, p, q])
    return sparse.csr_matrix(
        (np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(2 * n, 2 * n)
    )


def assemble(mesh, rep, curv):
    """Assemble the discrete Dirac operator of ``mesh``."""
    if curv.mesh_id != mesh.fingerprint or len(curv.H) != mesh.n_vertices:
        raise CurvatureMismatch("curvature field was computed on a different mesh")
    V, F = mesh.vertices, mesh.faces
    n = mesh.n_vertices
    x = [V[F[:, c]] for c in range(3)]
    opp = [x[2] - x[1], x[0] - x[2], x[1] - x[0]]
    area = mesh.face_areas

    rows, cols, blocks = [], [], []
    for a in range(3):
        g = gamma(rep, opp[a]) / 6.0
        for b in range(3):
            rows.append(F[:, b])
            cols.append(F[:, a])
            blocks.append(g)
    D = _block_matrix(np.concatenate(rows), np.concatenate(cols), np.concatenate(blocks), n)
    D_h = D.conj().T
    denom = sla.norm(D)
    defect = float(sla.norm(D - D_h) / denom) if denom > 0 else 0.0
    D_ext = ((D + D_h) * 0.5).tocsr()

    mass = np.repeat(mesh.vertex_areas, 2)
    H = np.asarray(curv.H, dtype=float)
    D_int = (D_ext + sparse.diags(np.repeat(H, 2) * mass)).tocsr()

    # face-wise |D psi|^2 at edge midpoints: weight area/3 each
    nF = len(F)
    qrows, qcols, qblocks = [], [], []
    for q in range(3):
        bary = np.full(3, 0.5)
        bary[q] = 0.0
        Hq = sum(bary[c] * H[F[:, c]] for c in range(3))
        for a in range(3):
            blk = gamma(rep, opp[a] / (2 * area[:, None])) + (Hq * bary[a])[:, None, None] * np.eye(2)
            blk = blk * np.sqrt(area / 3.0)[:, None, None]
            qrows.append(3 * np.arange(nF) + q)
            qcols.append(F[:, a])
            qblocks.append(blk)
    r, c, v = [], [], []
    qr, qc, qb = np.concatenate(qrows), np.concatenate(qcols), np.concatenate(qblocks)
    for p in range(2):
        for s in range(2):
            r.append(2 * qr + p)
            c.append(2 * qc + s)
            v.append(qb[:, p, s])
    B = sparse.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(6 * nF, 2 * n))
    energy = (B.conj().T @ B).tocsr()
    energy = ((energy + energy.conj().T) * 0.5).tocsr()

    return DiracOperator(
        mesh_id=mesh.fingerprint,
        mesh_name=mesh.name or "",
        D_ext=D_ext,
        D_int=D_int,
        energy=energy,
        mass=mass,
        H=H,
        normals=mesh.vertex_normals.copy(),
        symmetrization_defect=defect,
    )


def constant_spinor(op, phi0):
    """Restriction of a constant ambient spinor, flattened."""
    return np.tile(np.asarray(phi0, dtype=complex), op.n_vertices)


def apply_dirac(op, psi):
    """Pointwise values of ``D psi`` (``M^-1 D_int psi``), same shape as ``psi``."""
    flat = np.asarray(psi, dtype=complex).reshape(-1)
    out = (op.D_int @ flat) / op.mass
    return out.reshape(np.shape(psi))


def normal_conjugate(mesh, rep, psi):
    """Pointwise Clifford multiplication by the inner vertex normal."""
    arr = np.asarray(psi, dtype=complex)
    out = apply(gamma(rep, mesh.vertex_normals), arr.reshape(-1, 2))
    return out.reshape(arr.shape)


def m_inner(op, psi, phi):
    """Mass-weighted Hermitian product ``sum_i a_i <psi_i, phi_i>``."""
    a = np.asarray(psi, dtype=complex).reshape(-1)
    b = np.asarray(phi, dtype=complex).reshape(-1)
    return complex(np.sum(op.mass * a * np.conj(b)))


def m_norm(op, psi):
    return float(np.sqrt(max(m_inner(op, psi, psi).real, 0.0)))


def quadratic_form(op, psi):
    """``<D psi, psi>`` in the mass-weighted L^2 product (real)."""
    flat = np.asarray(psi, dtype=complex).reshape(-1)
    return float(np.real(np.vdot(flat, op.D_int @ flat)))


def anticommutation_residual(op, mesh, rep, lam, v):
    """``|D(gamma(N) v) + lam gamma(N) v|_M / |v|_M`` for an eigenpair."""
    w = normal_conjugate(mesh, rep, v).reshape(-1)
    r = op.D_int @ w + lam * op.mass * w
    return float(np.sqrt(np.sum(np.abs(r) ** 2 / op.mass)) / m_norm(op, v))


# ---------------------------------------------------------------- spectrum


@dataclass
class SpectrumReport:
    """Smallest-magnitude eigenpairs of a DiracOperator.

    ``eigenvalues`` / ``eigenvectors`` hold the ``k`` requested pairs; the
    ``resolved_*`` arrays hold every Ritz pair of the resolved subspace and
    back the spectral projector.  Eigenvectors are mass-orthonormal columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    residuals: np.ndarray
    consistency_residuals: np.ndarray
    discretization_estimates: np.ndarray
    partners: np.ndarray
    symmetry_residual: float
    symmetry_tolerance: float
    resolved_eigenvalues: np.ndarray = field(repr=False)
    resolved_vectors: np.ndarray = field(repr=False)
    mass: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    @property
    def k(self):
        return len(self.eigenvalues)

    @property
    def symmetric(self):
        return self.symmetry_residual <= self.symmetry_tolerance

    @property
    def full_basis(self):
        return self.resolved_vectors.shape[1] == len(self.mass)

    def spinor(self, i):
        """Eigenvector ``i`` as a ``(V, 2)`` spinor field."""
        return self.eigenvectors[:, i].reshape(-1, 2)

    def groups(self, rtol=CLUSTER_RTOL):
        """Multiplicity groups as ``(value, multiplicity)`` in report order."""
        return cluster(self.eigenvalues, rtol)

    def lambda1(self):
        """Smallest nonnegative eigenvalue among the resolved pairs, or None."""
        nonneg = self.resolved_eigenvalues[self.resolved_eigenvalues >= 0]
        return float(nonneg.min()) if len(nonneg) else None

    def to_dict(self, timestamp=True):
        groups = self.groups()
        out = {
            "schema_version": SCHEMA_VERSION,
            "kind": "spectrum",
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "distinct_eigenvalues": [float(g[0]) for g in groups],
            "multiplicities": [int(g[1]) for g in groups],
            "residuals": [float(x) for x in self.residuals],
            "consistency_residuals": [float(x) for x in self.consistency_residuals],
            "discretization_estimates": [float(x) for x in self.discretization_estimates],
            "symmetry_residual": float(self.symmetry_residual),
            "symmetry_tolerance": float(self.symmetry_tolerance),
            "symmetric": bool(self.symmetric),
            "mesh": {k: v for k, v in self.metadata.items() if k.startswith("mesh_")},
            "solver": {k: v for k, v in self.metadata.items() if not k.startswith("mesh_")},
        }
        if timestamp:
            out["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        return out

    def to_json(self, timestamp=True):
        return json.dumps(self.to_dict(timestamp=timestamp), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "residual", "consistency_residual", "partner"])
        for i, lam in enumerate(self.eigenvalues):
            w.writerow([i, repr(float(lam)), repr(float(self.residuals[i])),
                        repr(float(self.consistency_residuals[i])), repr(float(self.partners[i]))])
        return buf.getvalue()


def cluster(values, rtol=CLUSTER_RTOL):
    """Group consecutive values closer than ``rtol`` relative."""
    groups = []
    for x in values:
        if groups and abs(x - groups[-1][2]) <= rtol * max(abs(x), abs(groups[-1][2]), 1e-300):
            v, m, _ = groups[-1]
            groups[-1] = ((v * m + x) / (m + 1), m + 1, x)
        else:
            groups.append((x, 1, x))
    return [(v, m) for v, m, _ in groups]


def _low_energy_modes(op, count, seed):
    """Lowest ``count`` eigenpairs of ``energy v = mu M v``."""
    n = op.dim
    sqrt_m = np.sqrt(op.mass)
    if n <= DENSE_LIMIT:
        A = op.energy.toarray() / sqrt_m[:, None] / sqrt_m[None, :]
        mu, W = scipy.linalg.eigh(A, subset_by_index=[0, min(count, n) - 1])
        return mu, W / sqrt_m[:, None], "dense"
    scale = 4 * np.pi / (np.sum(op.mass) / 2)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    try:
        mu, Q = sla.eigsh(
            op.energy.tocsc(), k=count, M=sparse.diags(op.mass).tocsc(),
            sigma=-0.1 * scale, which="LM", v0=v0, tol=1e-12,
        )
    except sla.ArpackNoConvergence as exc:
        raise SolverFailure("shift-invert Lanczos did not converge") from exc
    order = np.argsort(mu)
    return mu[order], Q[:, order], "shift-invert"


def _m_orthonormalize(Q, mass):
    G = Q.conj().T @ (mass[:, None] * Q)
    G = 0.5 * (G + G.conj().T)
    L = np.linalg.cholesky(G)
    return scipy.linalg.solve_triangular(L, Q.conj().T, lower=True).conj().T


def _cut(mu, k, n_total, exhaustive):
    """Subspace size: the widest relative gap at or beyond ``k``."""
    if exhaustive:
        return len(mu), np.inf
    best, gap = None, -1.0
    for c in range(k, len(mu)):
        g = (mu[c] - mu[c - 1]) / max(abs(mu[c]), 1e-300)
        if g >= gap:
            best, gap = c, g
    return best, gap


def _pair(values, pool):
    """Match each value with the closest unused ``-x`` in ``pool``."""
    used = np.zeros(len(pool), dtype=bool)
    partners = np.empty(len(values))
    idx = np.empty(len(values), dtype=int)
    for i in np.argsort(np.abs(values), kind="stable"):
        cost = np.abs(values[i] + pool)
        cost[used] = np.inf
        j = int(np.argmin(cost))
        used[j] = True
        partners[i] = pool[j]
        idx[i] = j
    return partners, idx


def spectrum(op, k, seed=0, min_gap=1e-3):
    """The ``k`` smallest-magnitude eigenpairs of the discrete Dirac operator.

    Eigenvalues are sorted by magnitude, negative first on ties.  Raises
    SolverFailure when the residuals exceed ``SOLVER_RTOL`` relative.
    """
    n = op.dim
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    count = min(n, max(2 * k + 16, 32))
    while True:
        mu, Q, method = _low_energy_modes(op, count, seed)
        exhaustive = count >= n
        m, gap = _cut(mu, k, n, exhaustive)
        if exhaustive or gap >= min_gap:
            break
        count = min(n, 2 * count)
    Q = _m_orthonormalize(Q[:, :m], op.mass)
    mu = mu[:m]

    AQ = op.energy @ Q
    energy_res = np.linalg.norm((AQ - op.mass[:, None] * Q * mu) / np.sqrt(op.mass)[:, None], axis=0)
    scale_mu = max(float(np.max(np.abs(mu))), 1e-300)

    DQ = op.D_int @ Q
    T = Q.conj().T @ DQ
    T = 0.5 * (T + T.conj().T)
    lam, U = np.linalg.eigh(T)
    X = Q @ U
    DX = DQ @ U

    t_norm = max(float(np.max(np.abs(lam))), 1e-300)
    reduced = np.linalg.norm(T @ U - U * lam, axis=0)
    full = np.linalg.norm((DX - op.mass[:, None] * X * lam) / np.sqrt(op.mass)[:, None], axis=0)
    energy_x = np.real(np.einsum("ij,ij->j", X.conj(), op.energy @ X))
    delta = np.abs(np.abs(lam) - np.sqrt(np.maximum(energy_x, 0.0)))

    worst = max(float(np.max(reduced)) / t_norm, float(np.max(energy_res)) / scale_mu if method != "dense" else 0.0)
    if worst > SOLVER_RTOL:
        raise SolverFailure(f"eigen residual {worst:.3e} exceeds {SOLVER_RTOL:g}", residual=worst)

    order = np.lexsort((lam, np.abs(lam)))
    lam, X, reduced, full, delta = lam[order], X[:, order], reduced[order], full[order], delta[order]

    sel = slice(0, k)
    partners, pidx = _pair(lam[sel], lam)
    sym_res = float(np.max(np.abs(lam[sel] + partners)))
    involved = np.concatenate([delta[sel], delta[pidx]])
    sym_tol = 10.0 * float(np.max(reduced)) + 2.0 * float(np.max(involved))

    meta = {
        "mesh_name": op.mesh_name,
        "mesh_id": op.mesh_id,
        "mesh_vertices": op.n_vertices,
        "method": method,
        "subspace_dim": int(m),
        "spectral_gap": float(gap) if np.isfinite(gap) else None,
        "k": int(k),
        "seed": int(seed),
        "symmetrization_defect": float(op.symmetrization_defect),
        "version": __version__,
    }
    return SpectrumReport(
        eigenvalues=lam[sel].copy(),
        eigenvectors=X[:, sel].copy(),
        residuals=reduced[sel] / t_norm,
        consistency_residuals=full[sel],
        discretization_estimates=delta[sel].copy(),
        partners=partners,
        symmetry_residual=sym_res,
        symmetry_tolerance=sym_tol,
        resolved_eigenvalues=lam,
        resolved_vectors=X,
        mass=op.mass.copy(),
        metadata=meta,
    )


# --------------------------------------------------------------- projector


def spectral_coefficients(report, psi, tol=1e-8):
    """Coefficients of ``psi`` in the resolved eigenbasis.

    Raises IncompleteBasis when more than ``tol`` (relative, mass norm) of
    ``psi`` lies outside the resolved subspace.
    """
    flat = np.asarray(psi, dtype=complex).reshape(-1)
    X = report.resolved_vectors
    c = X.conj().T @ (report.mass * flat)
    rest = flat - X @ c
    total = np.sqrt(np.sum(report.mass * np.abs(flat) ** 2))
    outside = np.sqrt(np.sum(report.mass * np.abs(rest) ** 2))
    if total > 0 and outside > tol * total:
        raise IncompleteBasis(
            f"{outside / total:.3e} of the field lies outside the {X.shape[1]} resolved eigenpairs"
        )
    return c


def project_nonneg(report, psi, tol=1e-8):
    """Mass-orthogonal projection onto eigenspinors with eigenvalue >= 0."""
    arr = np.asarray(psi, dtype=complex)
    c = spectral_coefficients(report, arr, tol)
    keep = report.resolved_eigenvalues >= 0
    out = report.resolved_vectors[:, keep] @ c[keep]
    return out.reshape(arr.shape)


def resolved_dirac(report, psi, tol=1e-8):
    """Dirac operator restricted to the resolved subspace, pointwise values."""
    arr = np.asarray(psi, dtype=complex)
    c = spectral_coefficients(report, arr, tol)
    out = report.resolved_vectors @ (report.resolved_eigenvalues * c)
    return out.reshape(arr.shape)


def projection_gap(report, psi, tol=1e-8):
    """``<D pi+ psi, pi+ psi> - <D psi, psi>``; nonnegative, zero iff pi+ psi = psi."""
    c = spectral_coefficients(report, psi, tol)
    neg = report.resolved_eigenvalues < 0
    return float(np.sum(-report.resolved_eigenvalues[neg] * np.abs(c[neg]) ** 2))


def random_resolved_field(report, rng, nonneg_only=False):
    """Random combination of resolved eigenspinors (unit mass norm)."""
    lam = report.resolved_eigenvalues
    mask = lam >= 0 if nonneg_only else np.ones(len(lam), dtype=bool)
    c = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    c /= np.linalg.norm(c)
    return report.resolved_vectors[:, mask] @ c
