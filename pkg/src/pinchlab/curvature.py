"""Discrete mean curvature, shape operator and Lq norms of the second fundamental form.

Mean curvature is normalised as the average of the principal curvatures, so
the round sphere of radius R has H = 1/R.  With the outward normal H > 0 on
convex fixtures.  Everything is computed in normal coordinates at each
vertex, where the ambient Christoffel symbols vanish; this makes the same
code exact to second order in all three space forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, SurfaceMesh, VertexMeasure, vertex_measures
from .spectral import edge_weights


@dataclass(frozen=True)
class CurvatureField:
    """Per-vertex curvature data.

    Attributes
    ----------
    H : ndarray
        Normalised mean curvature ``(k1 + k2) / 2``.
    B_norm : ndarray
        ``sqrt(k1**2 + k2**2)``.
    principal : (V, 2) ndarray
        Principal curvatures, descending.
    """

    H: np.ndarray
    B_norm: np.ndarray
    principal: np.ndarray

    @property
    def n(self) -> int:
        return self.principal.shape[1]


def mean_curvature(mesh: SurfaceMesh, measure: VertexMeasure | None = None) -> np.ndarray:
    """Cotangent mean curvature ``-<(1/m_i) sum_j w_ij log_i(j), nu_i> / n``."""
    measure = vertex_measures(mesh) if measure is None else measure
    e, w = edge_weights(mesh)
    w = np.maximum(w, 0.0)
    V = mesh.n_vertices
    n = mesh.ambient.dim - 1
    i, j = np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]]
    ww = np.r_[w, w]
    vec = np.zeros((V, mesh.ambient.dim))
    np.add.at(vec, i, ww[:, None] * mesh.local(i, j))
    lap = vec / measure.dual_area[:, None]
    return -np.einsum("ij,ij->i", lap, mesh.normals_local) / n


def _tangent_basis(nu):
    """Two unit vectors completing ``nu`` to a positively oriented orthonormal basis."""
    a = np.where(np.abs(nu[:, [0]]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t1 = a - np.einsum("ij,ij->i", a, nu)[:, None] * nu
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(nu, t1)
    return t1, t2


def _fit(mesh: SurfaceMesh, ring, rows):
    """Quadric normal equations for vertices ``rows`` over the given ring matrix."""
    R = ring[rows].tocoo()
    ci = rows[R.row]
    cj = R.col
    nu = mesh.normals_local
    t1, t2 = _tangent_basis(nu[rows])
    p = mesh.local(ci, cj)
    u = np.einsum("ij,ij->i", p, t1[R.row])
    v = np.einsum("ij,ij->i", p, t2[R.row])
    z = np.einsum("ij,ij->i", p, nu[ci])
    # rescale per vertex for conditioning
    h = np.zeros(len(rows))
    cnt = np.bincount(R.row, minlength=len(rows)).astype(float)
    np.add.at(h, R.row, np.hypot(u, v))
    h = h / np.maximum(cnt, 1)
    hs = h[R.row]
    us, vs = u / hs, v / hs
    A = np.stack([us * us, us * vs, vs * vs, us, vs], 1)
    G = np.zeros((len(rows), 5, 5))
    b = np.zeros((len(rows), 5))
    np.add.at(G, R.row, A[:, :, None] * A[:, None, :])
    np.add.at(b, R.row, A * (z / hs)[:, None])
    return G, b, h, cnt


def shape_operator(mesh: SurfaceMesh) -> CurvatureField:
    """Principal curvatures from a least-squares osculating quadric over the 2-ring.

    The height ``z = a u^2 + b uv + c v^2 + d u + e v`` is fitted in the plane
    orthogonal to the vertex normal; curvatures are the eigenvalues of
    ``-I^{-1} II``.  Ill-conditioned stencils are refitted on the 3-ring.

    Raises
    ------
    MeshError
        If a vertex stencil stays rank deficient on the 3-ring.
    """
    if mesh.ambient.dim != 3:
        raise NotImplementedError("shape operator implemented for surfaces only")
    V = mesh.n_vertices
    coef = np.zeros((V, 5))
    scale = np.ones(V)
    pending = np.arange(V)
    for k in (2, 3):
        ring = mesh.ring(k)
        G, b, h, cnt = _fit(mesh, ring, pending)
        ev = np.linalg.eigvalsh(G)
        good = (cnt >= 5) & (ev[:, 0] > 1e-8 * np.maximum(ev[:, -1], 1e-300))
        if np.any(good):
            coef[pending[good]] = np.linalg.solve(G[good], b[good][:, :, None])[:, :, 0]
            scale[pending[good]] = h[good]
        pending = pending[~good]
        if len(pending) == 0:
            break
    if len(pending):
        raise MeshError(f"rank-deficient curvature stencil at vertex {int(pending[0])}")
    a, bb, c, d, e = coef.T
    # undo the per-vertex length scaling: z/h = f(u/h, v/h)
    hess = np.empty((V, 2, 2))
    hess[:, 0, 0] = 2 * a / scale
    hess[:, 1, 1] = 2 * c / scale
    hess[:, 0, 1] = hess[:, 1, 0] = bb / scale
    g = np.stack([d, e], 1)
    I = np.eye(2)[None] + g[:, :, None] * g[:, None, :]
    II = hess / np.sqrt(1.0 + np.sum(g * g, axis=1))[:, None, None]
    L = np.linalg.cholesky(I)
    Li = np.linalg.inv(L)
    S = -Li @ II @ np.swapaxes(Li, 1, 2)
    kappa = np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, 1, 2)))[:, ::-1]
    return CurvatureField(kappa.mean(axis=1), np.linalg.norm(kappa, axis=1), kappa)


def norm_B_q(field: CurvatureField, measure: VertexMeasure, q: float) -> float:
    """Normalised ``(1/|M| int |B|^q)^(1/q)``; ``q = inf`` gives the maximum."""
    if not q > 0:
        raise ValueError("q must be positive")
    if np.isinf(q):
        return float(field.B_norm.max())
    return float(measure.mean(field.B_norm**q) ** (1.0 / q))


def h_infty(field) -> float:
    """``max |H|`` over the vertices of a field or a raw array."""
    H = field.H if isinstance(field, CurvatureField) else np.asarray(field)
    if H.size == 0:
        raise ValueError("empty curvature field")
    return float(np.max(np.abs(H)))
