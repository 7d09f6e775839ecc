"""Closed oriented triangle meshes in R^3 and their extrinsic curvature.

Faces are stored counter-clockwise when seen from outside, so the face
normal ``(x1 - x0) x (x2 - x0)`` points out of the enclosed domain and the
*inner* unit normal ``N`` used everywhere else is its negative.  Mean
curvature is signed against ``N``: a round sphere of radius r has H = 1/r.
"""

import hashlib
import io
import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import (
    DegenerateFace,
    DegenerateOneRing,
    InvalidParameter,
    NotClosed,
    NotOrientable,
    ParseError,
)

DEGENERATE_AREA_RATIO = 1e-12
NORMAL_ROW_WEIGHT = 1e-3


class TriMesh:
    """Validated closed triangle mesh.

    Parameters
    ----------
    vertices : (V, 3) array_like
    faces : (F, 3) array_like of int
    orient : bool
        Repair inconsistent face winding and flip components so normals
        computed from the winding point into the enclosed volume.  With
        ``orient=False`` the winding is kept exactly as given (used to
        probe sign conventions); it must still be consistent.
    name : str, optional
        Free-form label carried into reports.
    """

    def __init__(self, vertices, faces, orient=True, name=None):
        V = np.array(vertices, dtype=float)
        F = np.array(faces, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] != 3:
            raise ParseError("vertices must have shape (V, 3)")
        if F.ndim != 2 or F.shape[1] != 3 or len(F) == 0:
            raise ParseError("faces must have shape (F, 3)")
        if F.min() < 0 or F.max() >= len(V):
            raise ParseError("face index out of range")
        if not np.all(np.isfinite(V)):
            raise ParseError("non-finite vertex coordinate")
        if len(np.unique(F)) != len(V):
            raise ParseError("mesh has unreferenced vertices")

        self.name = name
        self.vertices = V
        self.faces = F
        self._check_faces()
        self._check_closed()
        self.faces = _consistent_winding(F, repair=orient)
        if orient:
            self.faces = _outward(self.vertices, self.faces)
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)

    def _check_faces(self):
        F = self.faces
        if np.any((F[:, 0] == F[:, 1]) | (F[:, 1] == F[:, 2]) | (F[:, 0] == F[:, 2])):
            raise DegenerateFace("face with repeated vertex index")
        bbox = np.ptp(self.vertices, axis=0)
        scale = float(np.dot(bbox, bbox))
        area = _face_areas(self.vertices, F)
        bad = np.flatnonzero(area < DEGENERATE_AREA_RATIO * scale)
        if len(bad):
            raise DegenerateFace(f"{len(bad)} face(s) with near-zero area, first is {bad[0]}")

    def _check_closed(self):
        e = np.sort(self.edge_array_directed(), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        if np.any(counts == 1):
            raise NotClosed(f"{int(np.sum(counts == 1))} boundary edge(s)")
        if np.any(counts > 2):
            raise NotClosed("non-manifold edge shared by more than two faces")

    def edge_array_directed(self):
        F = self.faces
        return np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @cached_property
    def edges(self):
        """Unique undirected edges as sorted index pairs, shape (E, 2)."""
        e = np.sort(self.edge_array_directed(), axis=1)
        return np.unique(e, axis=0)

    @property
    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_faces

    @property
    def genus(self):
        return (2 - self.euler_characteristic) // 2

    @cached_property
    def fingerprint(self):
        h = hashlib.sha1()
        h.update(np.ascontiguousarray(self.vertices).tobytes())
        h.update(np.ascontiguousarray(self.faces).tobytes())
        return h.hexdigest()[:16]

    @cached_property
    def face_areas(self):
        return _face_areas(self.vertices, self.faces)

    @cached_property
    def face_normals(self):
        """Inner unit normal of every face."""
        n = _face_cross(self.vertices, self.faces)
        return -n / np.linalg.norm(n, axis=1)[:, None]

    @cached_property
    def vertex_areas(self):
        """Lumped (barycentric) vertex areas: a third of each incident face."""
        a = np.zeros(self.n_vertices)
        np.add.at(a, self.faces.ravel(), np.repeat(self.face_areas / 3.0, 3))
        return a

    @cached_property
    def vertex_normals(self):
        """Inner unit vertex normals, area-weighted over incident faces."""
        n = -_face_cross(self.vertices, self.faces)
        acc = np.zeros((self.n_vertices, 3))
        for c in range(3):
            np.add.at(acc, self.faces[:, c], n)
        return acc / np.linalg.norm(acc, axis=1)[:, None]

    @property
    def total_area(self):
        return float(self.face_areas.sum())

    @property
    def enclosed_volume(self):
        """Signed volume ``(1/3) int <x, N> dA`` with the inner normal.

        Negative for a correctly oriented mesh.
        """
        x = self.vertices[self.faces].mean(axis=1)
        return float(np.sum(x * self.face_normals, axis=1) @ self.face_areas) / 3.0

    @cached_property
    def adjacency(self):
        e = self.edges
        n = self.n_vertices
        data = np.ones(2 * len(e))
        A = sparse.csr_matrix(
            (data, (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(n, n),
        )
        A.sort_indices()
        return A

    @property
    def mean_edge_length(self):
        e = self.edges
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).mean())

    def flipped(self):
        """Same surface with every face reversed and no re-orientation."""
        return TriMesh(self.vertices.copy(), self.faces[:, ::-1].copy(), orient=False, name=self.name)

    def __repr__(self):
        return f"TriMesh(name={self.name!r}, V={self.n_vertices}, F={self.n_faces}, chi={self.euler_characteristic})"


def _face_cross(V, F):
    x0, x1, x2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    return np.cross(x1 - x0, x2 - x0)


def _face_areas(V, F):
    return 0.5 * np.linalg.norm(_face_cross(V, F), axis=1)


def _consistent_winding(F, repair):
    """Propagate a consistent winding across faces by BFS.

    Two faces sharing an edge are consistently wound when they traverse it
    in opposite directions.
    """
    F = F.copy()
    nF = len(F)
    directed = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    owner = np.tile(np.arange(nF), 3)
    key = np.sort(directed, axis=1)
    order = np.lexsort((key[:, 1], key[:, 0]))
    # closedness was checked, so sorted keys come in exact pairs
    a, b = order[0::2], order[1::2]
    fa, fb = owner[a], owner[b]
    same_dir = directed[a, 0] == directed[b, 0]
    nbrs = [[] for _ in range(nF)]
    for x, y, s in zip(fa.tolist(), fb.tolist(), same_dir.tolist()):
        nbrs[x].append((y, s))
        nbrs[y].append((x, s))

    flip = np.full(nF, -1, dtype=np.int8)
    for seed in range(nF):
        if flip[seed] >= 0:
            continue
        flip[seed] = 0
        queue = deque([seed])
        while queue:
            f = queue.popleft()
            for g, same in nbrs[f]:
                want = flip[f] ^ int(same)
                if flip[g] < 0:
                    flip[g] = want
                    queue.append(g)
                elif flip[g] != want:
                    raise NotOrientable("surface admits no consistent orientation")
    if np.any(flip == 1):
        if not repair:
            raise NotOrientable("inconsistent face winding")
        F[flip == 1] = F[flip == 1][:, ::-1]
    return F


def _components(F, n_vertices):
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]]])
    G = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n_vertices, n_vertices))
    _, labels = sparse.csgraph.connected_components(G, directed=False)
    return labels[F[:, 0]]


def _outward(V, F):
    """Flip each connected component so its outward volume is positive."""
    F = F.copy()
    comp = _components(F, len(V))
    x = V[F].mean(axis=1)
    contrib = np.sum(x * _face_cross(V, F), axis=1) / 6.0
    for c in np.unique(comp):
        sel = comp == c
        if contrib[sel].sum() < 0:
            F[sel] = F[sel][:, ::-1]
    return F


# ---------------------------------------------------------------- loaders


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8", errors="replace"), None
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, "rb") as fh:
                return fh.read().decode("utf-8", errors="replace"), str(source)
        except OSError as exc:
            raise ParseError(f"cannot read mesh file {source!s}: {exc.strerror}") from exc
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    return data, getattr(source, "name", None)


def _fan(poly):
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


def _parse_off(text):
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())
    if not tokens or not tokens[0][0].endswith("OFF"):
        raise ParseError("missing OFF header")
    head = tokens[0][1:] or (tokens.pop(1) if len(tokens) > 1 else [])
    rows = tokens[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
        verts = [[float(t) for t in r[:3]] for r in rows[:nv]]
        faces = []
        for r in rows[nv : nv + nf]:
            k = int(r[0])
            poly = [int(t) for t in r[1 : 1 + k]]
            if k < 3 or len(poly) != k:
                raise ParseError("malformed OFF face record")
            faces.extend(_fan(poly))
    except (IndexError, ValueError) as exc:
        raise ParseError(f"malformed OFF data: {exc}") from exc
    if len(verts) != nv or any(len(v) != 3 for v in verts):
        raise ParseError("OFF vertex count does not match header")
    if len(rows) < nv + nf:
        raise ParseError("OFF face count does not match header")
    return verts, faces


def _parse_obj(text):
    verts, faces = [], []
    try:
        for line in text.splitlines():
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(t) for t in parts[1:4]])
                if len(verts[-1]) != 3:
                    raise ParseError("OBJ vertex needs three coordinates")
            elif parts[0] == "f":
                poly = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    poly.append(i - 1 if i > 0 else len(verts) + i)
                if len(poly) < 3:
                    raise ParseError("OBJ face needs at least three vertices")
                faces.extend(_fan(poly))
    except ValueError as exc:
        raise ParseError(f"malformed OBJ data: {exc}") from exc
    return verts, faces


def load_mesh(source, format=None, orient=True):
    """Read an ASCII OFF or OBJ mesh (positions and faces only).

    ``source`` is a path, a bytes object or a binary/text stream.  When
    ``format`` is omitted it is taken from the file suffix or sniffed
    from the header.
    """
    text, name = _read_text(source)
    fmt = (format or "").lower()
    if not fmt and name:
        fmt = os.path.splitext(name)[1].lstrip(".").lower()
    if fmt not in ("off", "obj"):
        fmt = "off" if text.lstrip().split("\n", 1)[0].strip().endswith("OFF") else "obj"
    verts, faces = _parse_off(text) if fmt == "off" else _parse_obj(text)
    if not verts or not faces:
        raise ParseError("mesh has no vertices or faces")
    label = os.path.basename(name) if name else None
    return TriMesh(verts, faces, orient=orient, name=label)


def write_off(mesh, dest):
    buf = io.StringIO()
    buf.write(f"OFF\n{mesh.n_vertices} {mesh.n_faces} 0\n")
    for v in mesh.vertices:
        buf.write("{!r} {!r} {!r}\n".format(*map(float, v)))
    for f in mesh.faces:
        buf.write(f"3 {f[0]} {f[1]} {f[2]}\n")
    data = buf.getvalue()
    if hasattr(dest, "write"):
        dest.write(data)
    else:
        with open(dest, "w") as fh:
            fh.write(data)


def write_obj(mesh, dest):
    lines = ["v {!r} {!r} {!r}".format(*map(float, v)) for v in mesh.vertices]
    lines += [f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}" for f in mesh.faces]
    data = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(data)
    else:
        with open(dest, "w") as fh:
            fh.write(data)


# ------------------------------------------------------------- generators

_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
)


def _icosphere(subdivisions):
    t = (1 + 5 ** 0.5) / 2
    V = np.array(
        [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
         (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
         (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)],
        dtype=float,
    )
    V /= np.linalg.norm(V, axis=1)[:, None]
    F = _ICO_FACES.copy()
    for _ in range(subdivisions):
        e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        uniq, inv = np.unique(np.sort(e, axis=1), axis=0, return_inverse=True)
        inv = inv.ravel()
        mid = V[uniq[:, 0]] + V[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1)[:, None]
        m = len(V) + inv.reshape(3, -1)
        ab, bc, ca = m[0], m[1], m[2]
        a, b, c = F[:, 0], F[:, 1], F[:, 2]
        F = np.concatenate(
            [np.stack(q, axis=1) for q in ((a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca))]
        )
        V = np.concatenate([V, mid])
    return V, F


def make_sphere(radius, subdivisions):
    """Icosphere of the given radius; every vertex lies on the sphere."""
    if not radius > 0:
        raise InvalidParameter("radius must be positive")
    if int(subdivisions) != subdivisions or subdivisions < 3:
        raise InvalidParameter("subdivisions must be an integer >= 3")
    V, F = _icosphere(int(subdivisions))
    return TriMesh(radius * V, F, name=f"sphere(r={radius:g},s={int(subdivisions)})")


def make_ellipsoid(a, b, c, subdivisions):
    """Icosphere stretched to the ellipsoid x²/a² + y²/b² + z²/c² = 1."""
    if not (a > 0 and b > 0 and c > 0):
        raise InvalidParameter("semi-axes must be positive")
    if int(subdivisions) != subdivisions or subdivisions < 3:
        raise InvalidParameter("subdivisions must be an integer >= 3")
    V, F = _icosphere(int(subdivisions))
    V = V * np.array([a, b, c], dtype=float)
    return TriMesh(V, F, name=f"ellipsoid({a:g},{b:g},{c:g},s={int(subdivisions)})")


def make_torus(R, r, n_u, n_v):
    """Torus of revolution about the z-axis, tube radius ``r`` around a
    circle of radius ``R``; ``n_u`` samples around the axis, ``n_v`` around
    the tube.
    """
    if not (R > r > 0):
        raise InvalidParameter("need R > r > 0")
    for n in (n_u, n_v):
        if int(n) != n or n < 3:
            raise InvalidParameter("n_u and n_v must be integers >= 3")
    n_u, n_v = int(n_u), int(n_v)
    u = 2 * np.pi * np.arange(n_u) / n_u
    v = 2 * np.pi * np.arange(n_v) / n_v
    U, W = np.meshgrid(u, v, indexing="ij")
    rho = R + r * np.cos(W)
    V = np.stack([rho * np.cos(U), rho * np.sin(U), r * np.sin(W)], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    i, j = i.ravel(), j.ravel()

    def idx(p, q):
        return (p % n_u) * n_v + (q % n_v)

    a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
    F = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return TriMesh(V, F, name=f"torus(R={R:g},r={r:g},{n_u}x{n_v})")


# -------------------------------------------------------------- curvature


@dataclass(frozen=True)
class CurvatureField:
    """Per-vertex extrinsic curvature with respect to the inner normal.

    ``H`` is the cotangent mean curvature, ``K`` the angle-defect Gauss
    curvature, both normalized by the mixed Voronoi areas in ``areas``.
    ``A`` holds 2x2 shape operators in the tangent frames ``frames``; its
    trace is reconciled to ``2 H`` while the raw fitted value is kept in
    ``H_fit``.
    """

    mesh_id: str
    H: np.ndarray
    K: np.ndarray
    A: np.ndarray
    frames: np.ndarray
    areas: np.ndarray
    H_fit: np.ndarray
    angle_defect: np.ndarray

    @property
    def R(self):
        """Intrinsic scalar curvature; equals 2K on a surface."""
        return 2.0 * self.K

    @property
    def sigma_norm2(self):
        """Squared Frobenius norm of the shape operator, ``|sigma|^2``."""
        return np.sum(self.A ** 2, axis=(1, 2))

    def gauss_bonnet_total(self):
        return float(np.sum(self.K * self.areas))


def _cotangents(V, F):
    """Cotangent of the interior angle at each corner, shape (F, 3)."""
    cots = np.empty(F.shape)
    dbl_area = np.linalg.norm(_face_cross(V, F), axis=1)
    for c in range(3):
        p, q, s = V[F[:, c]], V[F[:, (c + 1) % 3]], V[F[:, (c + 2) % 3]]
        cots[:, c] = np.sum((q - p) * (s - p), axis=1) / dbl_area
    return cots


def _corner_angles(V, F):
    ang = np.empty(F.shape)
    for c in range(3):
        p, q, s = V[F[:, c]], V[F[:, (c + 1) % 3]], V[F[:, (c + 2) % 3]]
        u, w = q - p, s - p
        ang[:, c] = np.arctan2(np.linalg.norm(np.cross(u, w), axis=1), np.sum(u * w, axis=1))
    return ang


def mixed_areas(mesh):
    """Mixed Voronoi vertex areas (Voronoi cells, barycentric fallback on
    obtuse triangles).  They sum to the total surface area.
    """
    V, F = mesh.vertices, mesh.faces
    cots = _cotangents(V, F)
    ang = _corner_angles(V, F)
    fa = mesh.face_areas
    out = np.zeros(mesh.n_vertices)
    obtuse = ang > np.pi / 2
    any_obtuse = obtuse.any(axis=1)
    for c in range(3):
        p, q, s = (c + 1) % 3, (c + 2) % 3, c
        # Voronoi share of corner c: edges to the two other corners
        e_cq = np.sum((V[F[:, c]] - V[F[:, q]]) ** 2, axis=1)
        e_cp = np.sum((V[F[:, c]] - V[F[:, p]]) ** 2, axis=1)
        vor = (e_cq * cots[:, p] + e_cp * cots[:, q]) / 8.0
        share = np.where(any_obtuse, np.where(obtuse[:, s], fa / 2.0, fa / 4.0), vor)
        np.add.at(out, F[:, c], share)
    return out


def cotangent_laplacian(mesh):
    """Symmetric positive semi-definite cotangent stiffness matrix."""
    V, F = mesh.vertices, mesh.faces
    cots = _cotangents(V, F)
    rows, cols, vals = [], [], []
    for c in range(3):
        p, q = F[:, (c + 1) % 3], F[:, (c + 2) % 3]
        rows += [p, q]
        cols += [q, p]
        vals += [cots[:, c] / 2.0, cots[:, c] / 2.0]
    n = mesh.n_vertices
    W = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return (sparse.diags(np.asarray(W.sum(axis=1)).ravel()) - W).tocsr()


def tangent_frames(normals):
    """Orthonormal tangent pairs ``(t1, t2)`` with ``t1 x t2 = N``; shape (V, 2, 3)."""
    N = np.asarray(normals, dtype=float)
    helper = np.where(np.abs(N[:, [0]]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t1 = np.cross(helper, N)
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(N, t1)
    return np.stack([t1, t2], axis=1)


def _fit_shape_operators(mesh, normals, frames):
    """Least-squares shape operator over each vertex's 1-ring.

    The primary equations are heights along the inner normal,
    ``z_j = 1/2 u_j^T A u_j`` (plus a tilt term when the ring has at least
    five vertices).  Weakly weighted rows for the tangential normal
    variation ``t . (N_j - N_i) = -A u_j`` pin down ``A`` on symmetric rings
    where heights alone are rank deficient (e.g. valence 4); vertex normals
    are only first-order accurate, so they are not given full weight.
    A convex patch yields a positive definite operator.
    """
    adj = mesh.adjacency
    deg = np.diff(adj.indptr)
    V = mesh.vertices
    A = np.empty((mesh.n_vertices, 2, 2))
    for d in np.unique(deg):
        verts = np.flatnonzero(deg == d)
        nbr = adj.indices[adj.indptr[verts][:, None] + np.arange(d)]
        diff = V[nbr] - V[verts][:, None, :]
        T = frames[verts]
        u = np.einsum("vkc,vjc->vjk", T, diff)
        z = np.einsum("vc,vjc->vj", normals[verts], diff)
        dn = np.einsum("vkc,vjc->vjk", T, normals[nbr] - normals[verts][:, None, :])
        scale = np.sqrt(np.mean(np.sum(u ** 2, axis=-1), axis=1))
        s_u = np.linalg.svd(u, compute_uv=False)
        degenerate = s_u[:, -1] < 1e-8 * scale
        if np.any(degenerate):
            raise DegenerateOneRing(f"vertex {int(verts[np.argmax(degenerate)])} has a collinear 1-ring")

        u0, u1 = u[..., 0], u[..., 1]
        zero = np.zeros_like(u0)
        height = np.stack([0.5 * u0 ** 2, u0 * u1, 0.5 * u1 ** 2], axis=-1)
        w = NORMAL_ROW_WEIGHT * scale[:, None]
        slope0 = np.stack([u0, u1, zero], axis=-1) * w[..., None]
        slope1 = np.stack([zero, u0, u1], axis=-1) * w[..., None]
        rows = np.concatenate([height, slope0, slope1], axis=1)
        rhs = np.concatenate([z, -dn[..., 0] * w, -dn[..., 1] * w], axis=1)
        if d >= 5:
            tilt = np.concatenate([u, np.zeros_like(u), np.zeros_like(u)], axis=1)
            rows = np.concatenate([rows, tilt], axis=-1)
        coef = np.einsum("vij,vj->vi", np.linalg.pinv(rows), rhs)
        A[verts, 0, 0] = coef[:, 0]
        A[verts, 0, 1] = A[verts, 1, 0] = coef[:, 1]
        A[verts, 1, 1] = coef[:, 2]
    return A


def curvature(mesh):
    """Extrinsic curvature of a TriMesh with respect to its inner normal."""
    V, F = mesh.vertices, mesh.faces
    areas = mixed_areas(mesh)
    N = mesh.vertex_normals
    L = cotangent_laplacian(mesh)
    # discrete Laplace-Beltrami of the position is 2 H N
    lap_x = -(L @ V) / areas[:, None]
    H = 0.5 * np.sum(lap_x * N, axis=1)

    ang = _corner_angles(V, F)
    angle_sum = np.zeros(mesh.n_vertices)
    np.add.at(angle_sum, F.ravel(), ang.ravel())
    defect = 2 * np.pi - angle_sum
    K = defect / areas

    frames = tangent_frames(N)
    A = _fit_shape_operators(mesh, N, frames)
    H_fit = 0.5 * (A[:, 0, 0] + A[:, 1, 1])
    A = A - (H_fit - H)[:, None, None] * np.eye(2)

    return CurvatureField(
        mesh_id=mesh.fingerprint,
        H=H,
        K=K,
        A=A,
        frames=frames,
        areas=areas,
        H_fit=H_fit,
        angle_defect=defect,
    )
