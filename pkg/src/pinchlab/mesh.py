"""Closed oriented triangle meshes immersed in a space-form chart.

All intrinsic quantities (edge lengths, areas, cotangents) are computed from
exact ambient geodesic distances between adjacent vertices.  Local
differential quantities (normals, curvature) are computed in normal
coordinates centred at each vertex.
"""

from __future__ import annotations

import logging
import math
import os
import tempfile
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.special import lpmv

from .spaceform import AmbientModel, DomainError, max_radius

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    """Raised when a mesh violates the closed-manifold invariants."""


@dataclass(frozen=True)
class VertexMeasure:
    """Dual cell areas, one per vertex."""

    dual_area: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.dual_area))

    def mean(self, values) -> float:
        """Area-normalised integral ``(1/|M|) int values``."""
        return float(np.dot(self.dual_area, values) / self.total)

    def integral(self, values) -> float:
        return float(np.dot(self.dual_area, values))


class SurfaceMesh:
    """Triangle mesh with vertices in the chart of ``ambient``.

    Parameters
    ----------
    vertices : (V, D) array
        Chart coordinates; ``D`` is ``ambient.embed_dim``.
    faces : (F, 3) int array
        Consistently oriented triangles.
    ambient : AmbientModel
    closed : bool
        Require every edge to be shared by exactly two oppositely oriented faces.
    allow_disconnected : bool
        Skip the single-component check (used by multi-body test fixtures).
    """

    def __init__(self, vertices, faces, ambient: AmbientModel | None = None, *, closed=True,
                 allow_disconnected=False, check=True):
        self.ambient = ambient if ambient is not None else AmbientModel(0.0)
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        self.closed = closed
        self.allow_disconnected = allow_disconnected
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)
        if check:
            self.validate()

    # -- invariants -----------------------------------------------------------

    def validate(self):
        V = len(self.vertices)
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be an (F, 3) array")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= V):
            raise MeshError("face index out of range")
        self.ambient.check_points(self.vertices)
        if self.closed:
            bad = self.boundary_edge_count()
            if bad:
                raise MeshError(f"mesh is not a closed oriented manifold ({bad} bad half-edges)")
        areas = self.face_areas
        if np.any(areas < 1e-12 * areas.mean()):
            raise MeshError(f"{int(np.sum(areas < 1e-12 * areas.mean()))} degenerate face(s)")
        if not self.allow_disconnected:
            ncomp, _ = connected_components(self.adjacency, directed=False)
            if ncomp != 1:
                raise MeshError(f"mesh has {ncomp} connected components")

    def boundary_edge_count(self) -> int:
        """Half-edges without an oppositely oriented twin (0 for a closed oriented manifold)."""
        V = len(self.vertices)
        he = self.half_edges
        key = he[:, 0] * V + he[:, 1]
        twin = he[:, 1] * V + he[:, 0]
        uniq, counts = np.unique(key, return_counts=True)
        dup = int(np.sum(counts > 1))
        missing = int(np.sum(~np.isin(twin, uniq)))
        return dup + missing

    # -- combinatorics --------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def half_edges(self) -> np.ndarray:
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs."""
        he = np.sort(self.half_edges, axis=1)
        return np.unique(he, axis=0)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        V = self.n_vertices
        e = self.edges
        data = np.ones(2 * len(e))
        A = sparse.coo_matrix((data, (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(V, V))
        return A.tocsr()

    def valence(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def ring(self, k: int) -> sparse.csr_matrix:
        """Boolean matrix of the k-ring neighbourhoods (diagonal excluded)."""
        A = self.adjacency.astype(bool).astype(np.int32)
        R = A.copy()
        for _ in range(k - 1):
            R = R + R @ A
        R = R.tocsr()
        R.setdiag(0)
        R.eliminate_zeros()
        R.data[:] = 1
        return R

    # -- intrinsic geometry ---------------------------------------------------

    @cached_property
    def face_edge_lengths(self) -> np.ndarray:
        """(F, 3) geodesic length of the edge opposite each corner."""
        x = self.vertices[self.faces]
        m = self.ambient
        l0 = m.distance(x[:, 1], x[:, 2])
        l1 = m.distance(x[:, 2], x[:, 0])
        l2 = m.distance(x[:, 0], x[:, 1])
        return np.stack([l0, l1, l2], axis=1)

    @cached_property
    def face_areas(self) -> np.ndarray:
        """Heron areas from intrinsic edge lengths (Kahan's stable ordering)."""
        L = np.sort(self.face_edge_lengths, axis=1)[:, ::-1]
        a, b, c = L[:, 0], L[:, 1], L[:, 2]
        prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
        return 0.25 * np.sqrt(np.maximum(prod, 0.0))

    @cached_property
    def face_cotangents(self) -> np.ndarray:
        """(F, 3) cotangent of the interior angle at each corner (law of cosines)."""
        L2 = self.face_edge_lengths**2
        A = self.face_areas[:, None]
        cot = np.empty_like(L2)
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            cot[:, k] = (L2[:, i] + L2[:, j] - L2[:, k]) / (4.0 * A[:, 0])
        return cot

    @cached_property
    def frames(self) -> np.ndarray:
        """Orthonormal ambient tangent frame at every vertex, (V, dim, D)."""
        return self.ambient.frame(self.vertices)

    def local(self, i, j) -> np.ndarray:
        """Normal coordinates of vertices ``j`` centred at vertices ``i``."""
        m = self.ambient
        return m.to_frame(self.frames[i], m.log(self.vertices[i], self.vertices[j]))

    @cached_property
    def normals_local(self) -> np.ndarray:
        """Unit vertex normals in each vertex's frame (area-weighted face normals)."""
        V = self.n_vertices
        acc = np.zeros((V, self.ambient.dim))
        f = self.faces
        for k in range(3):
            i, j, l = f[:, k], f[:, (k + 1) % 3], f[:, (k + 2) % 3]
            acc += _scatter(V, i, np.cross(self.local(i, j), self.local(i, l)))
        nrm = np.linalg.norm(acc, axis=1, keepdims=True)
        if np.any(nrm == 0):
            raise MeshError("vertex with vanishing normal")
        return acc / nrm

    def translated(self, vertices) -> "SurfaceMesh":
        return SurfaceMesh(vertices, self.faces, self.ambient, closed=self.closed,
                           allow_disconnected=self.allow_disconnected)

    def flipped(self) -> "SurfaceMesh":
        return SurfaceMesh(self.vertices, self.faces[:, ::-1], self.ambient, closed=self.closed,
                           allow_disconnected=self.allow_disconnected)


def _scatter(V, idx, vals):
    out = np.zeros((V,) + vals.shape[1:])
    np.add.at(out, idx, vals)
    return out


# -- measures ------------------------------------------------------------------


def total_area(mesh: SurfaceMesh) -> float:
    return float(np.sum(mesh.face_areas))


def triangle_quality(mesh: SurfaceMesh) -> np.ndarray:
    """``4 sqrt(3) A / sum L^2`` per face: 1 for equilateral, 0 for degenerate."""
    L = mesh.face_edge_lengths
    return 4 * np.sqrt(3) * mesh.face_areas / np.sum(L * L, axis=1)


def aspect_ratio(mesh: SurfaceMesh) -> np.ndarray:
    """Longest edge over the altitude onto it (``2/sqrt(3)`` for equilateral)."""
    L = mesh.face_edge_lengths
    return L.max(axis=1) ** 2 / (2 * mesh.face_areas)


def vertex_measures(mesh: SurfaceMesh) -> VertexMeasure:
    """Mixed Voronoi dual areas.

    Circumcentric Voronoi cells in non-obtuse triangles; in an obtuse triangle
    the obtuse corner gets half the area and the others a quarter each.  Cells
    are positive and sum to the total area exactly.
    """
    L2 = mesh.face_edge_lengths**2
    cot = mesh.face_cotangents
    A = mesh.face_areas
    obtuse = cot < 0
    any_obtuse = obtuse.any(axis=1)
    parts = []
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        vor = (L2[:, j] * cot[:, j] + L2[:, i] * cot[:, i]) / 8.0
        parts.append(np.where(any_obtuse, np.where(obtuse[:, k], 0.5 * A, 0.25 * A), vor))
    dual = np.bincount(mesh.faces.T.ravel(), weights=np.concatenate(parts), minlength=mesh.n_vertices)
    return VertexMeasure(dual)


def vertex_normals(mesh: SurfaceMesh) -> np.ndarray:
    """Unit normals as ambient tangent vectors at each vertex."""
    return mesh.ambient.from_frame(mesh.frames, mesh.normals_local)


# -- generators ------------------------------------------------------------------

_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_V = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
], dtype=float)
_ICO_F = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def unit_icosphere(subdivisions: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-sphere vertices and outward-oriented faces of a subdivided icosahedron."""
    if not 0 <= subdivisions <= 8:
        raise ValueError("subdivisions must be in [0, 8]")
    v = _ICO_V / np.linalg.norm(_ICO_V, axis=1, keepdims=True)
    f = _ICO_F.copy()
    for _ in range(subdivisions):
        V = len(v)
        e = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
        uniq, inv = np.unique(e, axis=0, return_inverse=True)
        inv = inv.ravel()
        mid = v[uniq[:, 0]] + v[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        nf = len(f)
        ab, bc, ca = V + inv[:nf], V + inv[nf:2 * nf], V + inv[2 * nf:]
        a, b, c = f[:, 0], f[:, 1], f[:, 2]
        f = np.concatenate([
            np.stack([a, ab, ca], 1), np.stack([b, bc, ab], 1),
            np.stack([c, ca, bc], 1), np.stack([ab, bc, ca], 1),
        ])
        v = np.vstack([v, mid])
    return v, f


def generate_icosphere(model: AmbientModel, center=None, radius: float = 1.0,
                       subdivisions: int = 4) -> SurfaceMesh:
    """Geodesic sphere ``S(center, radius)`` sampled at icosphere directions."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    if radius >= max_radius(model.delta):
        raise DomainError("radius beyond pi/sqrt(delta)")
    center = model.origin() if center is None else model.check_points(np.asarray(center, dtype=float))
    u, f = unit_icosphere(subdivisions)
    pts = model.point_from_local(np.broadcast_to(center, (len(u), model.embed_dim)), radius * u,
                                 frames=np.broadcast_to(model.frame(center), (len(u), model.dim, model.embed_dim)))
    return SurfaceMesh(pts, f, model)


def generate_revolution(model: AmbientModel, profile, n_theta: int, n_r: int | None = None,
                        caps: bool = True) -> SurfaceMesh:
    """Surface of revolution about the last coordinate axis.

    Parameters
    ----------
    profile : (m, 2) array or tuple
        Either a meridian polyline of ``(r, z)`` samples, or
        ``(upper, (0, r_max))`` / ``(upper, (0, r_max), lower)`` with graph
        functions ``r -> z`` sampled at ``n_r`` points (angle-uniform so that
        vertical tangents at ``r_max`` are resolved).  An endpoint with
        ``r == 0`` becomes a pole vertex; interior samples must have ``r > 0``.
    n_theta : int
        Number of angular samples.
    caps : bool
        Require both endpoints on the axis (a closed genus-0 surface); without
        caps the mesh is open and only usable for local tests.

    A meridian traced from the bottom pole upwards on the outside gives the
    outward orientation.
    """
    if isinstance(profile, tuple):
        if n_r is None or n_r < 2:
            raise ValueError("n_r is required for a functional profile")
        upper, (r0, r1) = profile[0], profile[1]
        lower = profile[2] if len(profile) > 2 else None
        t = np.linspace(0.0, 1.0, n_r)
        grid = r0 + (r1 - r0) * np.sin(0.5 * np.pi * t)
        meridian = sheet_meridian(upper, grid, lower)
    else:
        meridian = profile
    closed = caps
    mer = np.asarray(meridian, dtype=float)
    if mer.ndim != 2 or mer.shape[1] != 2 or len(mer) < 2:
        raise ValueError("meridian must be an (m, 2) array")
    if n_theta < 3:
        raise ValueError("n_theta must be >= 3")
    pole_tol = 1e-14
    start_pole = mer[0, 0] <= pole_tol
    end_pole = mer[-1, 0] <= pole_tol
    if np.any(mer[1:-1, 0] <= pole_tol):
        raise ValueError("interior meridian samples must stay off the axis")
    if closed and not (start_pole and end_pole):
        raise ValueError("closed surface needs both meridian endpoints on the axis")

    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    ct, st = np.cos(th), np.sin(th)
    verts = []
    ring_index = []
    idx = 0
    for k, (r, z) in enumerate(mer):
        if (k == 0 and start_pole) or (k == len(mer) - 1 and end_pole):
            verts.append(np.array([[0.0, 0.0, z]]))
            ring_index.append(np.array([idx]))
            idx += 1
        else:
            verts.append(np.stack([r * ct, r * st, np.full(n_theta, z)], 1))
            ring_index.append(idx + np.arange(n_theta))
            idx += n_theta
    faces = []
    for k in range(len(mer) - 1):
        A, B = ring_index[k], ring_index[k + 1]
        j = np.arange(n_theta)
        jn = (j + 1) % n_theta
        if len(A) == 1:
            faces.append(np.stack([np.full(n_theta, A[0]), B[jn], B[j]], 1))
        elif len(B) == 1:
            faces.append(np.stack([A[j], A[jn], np.full(n_theta, B[0])], 1))
        else:
            faces.append(np.stack([A[j], A[jn], B[jn]], 1))
            faces.append(np.stack([A[j], B[jn], B[j]], 1))
    return SurfaceMesh(np.vstack(verts), np.vstack(faces), model, closed=closed)


def sheet_meridian(upper, r_grid, lower=None, tol=1e-8) -> np.ndarray:
    """Closed meridian from two graph sheets ``z = upper(r)`` and ``z = lower(r)``.

    The sheets are joined at ``r_grid[-1]`` and, unless ``r_grid[0] == 0``
    (each sheet then ends at its own pole), also at ``r_grid[0]``.  The
    default lower sheet mirrors the upper one.
    """
    r = np.asarray(r_grid, dtype=float)
    if np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be increasing")
    lower = (lambda s: -np.asarray(upper(s))) if lower is None else lower
    zu = np.asarray(upper(r), dtype=float)
    zl = np.asarray(lower(r), dtype=float)
    if abs(zu[-1] - zl[-1]) > tol:
        raise MeshError("profile sheets do not meet at the outer circle")
    if r[0] > 0 and abs(zu[0] - zl[0]) > tol:
        raise MeshError("profile sheets do not meet at the inner circle")
    # bottom sheet from inner to outer, then upper sheet back inwards
    low = np.stack([r, zl], 1)
    up = np.stack([r[::-1], zu[::-1]], 1)[1:]
    mer = np.vstack([low, up])
    if r[0] > 0:
        raise MeshError("an annular profile pair gives a torus; only r_min = 0 closes to a sphere")
    return mer


def real_spherical_harmonic(l: int, m: int, u) -> np.ndarray:
    """Unnormalised real spherical harmonic on unit vectors ``u``."""
    u = np.asarray(u, dtype=float)
    ct = np.clip(u[:, 2], -1.0, 1.0)
    ph = np.arctan2(u[:, 1], u[:, 0])
    p = lpmv(abs(m), l, ct)
    if m > 0:
        return p * np.cos(m * ph)
    if m < 0:
        return p * np.sin(-m * ph)
    return p


def perturb_radially(mesh: SurfaceMesh, amplitude: float, wave=None, seed=None, center=None) -> SurfaceMesh:
    """Move every vertex along its radial geodesic from ``center``.

    The displacement is ``amplitude * f(u)`` with ``u`` the unit direction in
    the frame at ``center`` and ``f`` a spherical-harmonic field normalised to
    ``max |f| = 1`` over the vertex set: a single mode ``wave = (l, m)`` or a
    seeded random combination of degrees 2 to 4.  Self-intersections are not
    detected.
    """
    model = mesh.ambient
    if center is None:
        center = model.project(mesh.vertices.mean(axis=0))
    center = np.asarray(center, dtype=float)
    if amplitude == 0:
        return SurfaceMesh(mesh.vertices.copy(), mesh.faces, model, closed=mesh.closed,
                           allow_disconnected=mesh.allow_disconnected)
    V = mesh.n_vertices
    cf = np.broadcast_to(model.frame(center), (V, model.dim, model.embed_dim))
    cc = np.broadcast_to(center, (V, model.embed_dim))
    loc = model.to_frame(cf, model.log(cc, mesh.vertices))
    rad = np.linalg.norm(loc, axis=1)
    if np.any(rad <= 0):
        raise MeshError("a vertex coincides with the perturbation center")
    if abs(amplitude) >= 0.5 * rad.min():
        raise ValueError("amplitude must be below half the inradius")
    u = loc / rad[:, None]
    if wave is not None:
        field = real_spherical_harmonic(int(wave[0]), int(wave[1]), u)
    else:
        rng = np.random.default_rng(0 if seed is None else seed)
        field = np.zeros(V)
        for l in range(2, 5):
            for m in range(-l, l + 1):
                # unnormalised Legendre functions grow with m; rescale per mode
                y = real_spherical_harmonic(l, m, u)
                y = y / max(np.abs(y).max(), 1e-300)
                field += rng.normal() * y / l
    peak = np.abs(field).max()
    if peak == 0:
        raise ValueError("perturbation field vanishes on the vertex set")
    field = field / peak
    new_loc = (rad + amplitude * field)[:, None] * u
    pts = model.point_from_local(cc, new_loc, frames=cf)
    return SurfaceMesh(pts, mesh.faces, model, closed=mesh.closed, allow_disconnected=mesh.allow_disconnected)


# -- extrinsic balls and Hausdorff distance ------------------------------------


def _area_fraction_below(d, s):
    """Fraction of each triangle where the linear interpolant of corner values ``d`` is < s."""
    d = np.sort(d, axis=1)
    a, b, c = d[:, 0], d[:, 1], d[:, 2]
    frac = np.zeros(len(d))
    frac[s >= c] = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        m1 = (s > a) & (s <= b) & (s < c)
        frac[m1] = (s - a[m1]) ** 2 / ((b[m1] - a[m1]) * (c[m1] - a[m1]))
        m2 = (s > b) & (s < c)
        frac[m2] = 1.0 - (c[m2] - s) ** 2 / ((c[m2] - a[m2]) * (c[m2] - b[m2]))
    return np.clip(np.nan_to_num(frac, nan=1.0), 0.0, 1.0)


def extrinsic_ball_area(mesh: SurfaceMesh, x0, s: float, distances=None) -> float:
    """Area of ``M`` inside the ambient ball ``B(x0, s)``, faces split by linearised distance."""
    if s <= 0:
        raise ValueError("ball radius must be positive")
    if distances is None:
        distances = mesh.ambient.distance(mesh.vertices, np.asarray(x0, dtype=float))
    frac = _area_fraction_below(distances[mesh.faces], s)
    return float(np.dot(frac, mesh.face_areas))


def fibonacci_sphere(n: int) -> np.ndarray:
    """Quasi-uniform unit vectors on S^2."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    th = np.pi * (3.0 - math.sqrt(5.0)) * i
    return np.stack([rho * np.cos(th), rho * np.sin(th), z], 1)


def closest_point_on_triangles(p, a, b, c):
    """Closest points on triangles ``abc`` to points ``p`` (any dimension, row-wise)."""
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = 1.0 / (va + vb + vc)
        v = vb * denom
        w = vc * denom
        out = a + ab * v[:, None] + ac * w[:, None]
        # edge regions
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t = d1 / (d1 - d3)
        out[m] = a[m] + t[m, None] * ab[m]
        m2 = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        t = d2 / (d2 - d6)
        out[m2] = a[m2] + t[m2, None] * ac[m2]
        m3 = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        out[m3] = b[m3] + t[m3, None] * (c[m3] - b[m3])
    # vertex regions take precedence
    out[(d1 <= 0) & (d2 <= 0)] = a[(d1 <= 0) & (d2 <= 0)]
    mb = (d3 >= 0) & (d4 <= d3)
    out[mb] = b[mb]
    mc = (d6 >= 0) & (d5 <= d6)
    out[mc] = c[mc]
    return out


def point_mesh_distance(points, verts, faces, k: int = 12) -> np.ndarray:
    """Euclidean distance from each point to a triangle soup (k nearest-centroid candidates)."""
    tri = verts[faces]
    centroids = tri.mean(axis=1)
    tree = cKDTree(centroids)
    k = min(k, len(faces))
    _, cand = tree.query(points, k=k)
    cand = np.atleast_2d(cand).reshape(len(points), k)
    best = np.full(len(points), np.inf)
    for j in range(k):
        t = tri[cand[:, j]]
        q = closest_point_on_triangles(points, t[:, 0], t[:, 1], t[:, 2])
        best = np.minimum(best, np.linalg.norm(points - q, axis=1))
    return best


def hausdorff_to_geodesic_sphere(mesh: SurfaceMesh, p0, R0: float, oversample: int = 10) -> float:
    """Two-sided Hausdorff estimate between ``mesh`` and ``S(p0, R0)``.

    Direction mesh-to-sphere is exact at the vertices.  Direction
    sphere-to-mesh samples ``oversample * V`` quasi-uniform sphere points and
    measures their distance to the triangles: exactly in the euclidean chart,
    in normal coordinates at ``p0`` for ``delta < 0`` (the log map is
    1-Lipschitz there) and by chords in the embedding for ``delta > 0``.
    Both give lower estimates that converge under refinement.
    """
    model = mesh.ambient
    p0 = np.asarray(p0, dtype=float)
    r = model.distance(mesh.vertices, p0)
    d_mesh = float(np.max(np.abs(r - R0)))
    dirs = fibonacci_sphere(max(oversample * mesh.n_vertices, 1000))
    V = mesh.n_vertices
    if model.delta <= 0:
        cf = np.broadcast_to(model.frame(p0), (V, model.dim, model.embed_dim))
        verts = model.to_frame(cf, model.log(np.broadcast_to(p0, mesh.vertices.shape), mesh.vertices))
        pts = R0 * dirs
    else:
        verts = mesh.vertices
        pts = model.point_from_local(np.broadcast_to(p0, (len(dirs), model.embed_dim)), R0 * dirs,
                                     frames=np.broadcast_to(model.frame(p0), (len(dirs), model.dim, model.embed_dim)))
    d_sphere = float(np.max(point_mesh_distance(pts, verts, mesh.faces)))
    return max(d_mesh, d_sphere)


# -- file formats ----------------------------------------------------------------


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return repr(float(x))


def off_text(mesh: SurfaceMesh) -> str:
    V = mesh.vertices
    dim = V.shape[1]
    lines = ["OFF" if dim == 3 else f"nOFF\n{dim}", f"# ambient-delta {_fmt(mesh.ambient.delta)}",
             f"{len(V)} {len(mesh.faces)} 0"]
    lines += [" ".join(map(_fmt, v)) for v in V]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"


def obj_text(mesh: SurfaceMesh) -> str:
    lines = [f"# ambient-delta {_fmt(mesh.ambient.delta)}"]
    lines += ["v " + " ".join(map(_fmt, v)) for v in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"


def write_off(path, mesh: SurfaceMesh) -> None:
    """ASCII OFF with shortest round-trip float repr; 4D charts use the ``nOFF`` header."""
    atomic_write_text(path, off_text(mesh))


def write_obj(path, mesh: SurfaceMesh) -> None:
    atomic_write_text(path, obj_text(mesh))


def _delta_from_comments(comments):
    for c in comments:
        parts = c.lstrip("#").split()
        if len(parts) == 2 and parts[0] == "ambient-delta":
            return float(parts[1])
    return None


def _make_mesh(V, F, delta, stored, path):
    if delta is None:
        delta = 0.0 if stored is None else stored
    model = AmbientModel(delta)
    if V.shape[1] != model.embed_dim:
        raise MeshError(f"{path}: {V.shape[1]}-coordinate vertices do not fit the delta={delta} chart")
    return SurfaceMesh(V, F, model)


def read_off(path, delta: float | None = None) -> SurfaceMesh:
    """Read an ASCII OFF/nOFF triangle mesh.

    The ambient curvature comes from ``delta`` if given, else from an
    ``# ambient-delta`` comment, else 0.
    """
    with open(path) as fh:
        raw = fh.read().splitlines()
    comments = [ln.strip() for ln in raw if ln.strip().startswith("#")]
    tokens = []
    for ln in raw:
        ln = ln.split("#", 1)[0].split()
        tokens.extend(ln)
    try:
        it = iter(tokens)
        head = next(it)
        if head == "OFF":
            dim = 3
        elif head == "nOFF":
            dim = int(next(it))
        else:
            raise MeshError(f"{path}: not an OFF file")
        nv, nf = int(next(it)), int(next(it))
        next(it)
        V = np.array([[float(next(it)) for _ in range(dim)] for _ in range(nv)]).reshape(nv, dim)
        F = []
        for _ in range(nf):
            k = int(next(it))
            if k != 3:
                raise MeshError(f"{path}: only triangle faces are supported")
            F.append([int(next(it)) for _ in range(3)])
    except (StopIteration, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: truncated or malformed OFF ({exc})") from None
    return _make_mesh(V, np.array(F, dtype=np.int64).reshape(-1, 3), delta, _delta_from_comments(comments), path)


def read_obj(path, delta: float | None = None) -> SurfaceMesh:
    """Read positions and triangular faces of an ASCII OBJ (``v``/``f`` records only)."""
    V, F, comments = [], [], []
    with open(path) as fh:
        for ln in fh:
            s = ln.strip()
            if s.startswith("#"):
                comments.append(s)
                continue
            parts = s.split()
            if not parts:
                continue
            try:
                if parts[0] == "v":
                    V.append([float(x) for x in parts[1:]])
                elif parts[0] == "f":
                    if len(parts) != 4:
                        raise MeshError(f"{path}: only triangle faces are supported")
                    F.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
            except ValueError as exc:
                raise MeshError(f"{path}: malformed OBJ record {s!r}") from exc
    if not V or len({len(v) for v in V}) != 1:
        raise MeshError(f"{path}: missing or ragged vertex records")
    return _make_mesh(np.array(V), np.array(F, dtype=np.int64).reshape(-1, 3), delta,
                      _delta_from_comments(comments), path)


def read_mesh(path, delta: float | None = None) -> SurfaceMesh:
    """Dispatch on the file suffix (``.off`` or ``.obj``)."""
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".off":
        return read_off(path, delta)
    if ext == ".obj":
        return read_obj(path, delta)
    raise MeshError(f"unsupported mesh format {ext!r}")


def write_mesh(path, mesh: SurfaceMesh) -> None:
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".off":
        write_off(path, mesh)
    elif ext == ".obj":
        write_obj(path, mesh)
    else:
        raise MeshError(f"unsupported mesh format {ext!r}")
