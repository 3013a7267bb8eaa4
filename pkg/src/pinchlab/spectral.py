"""Cotangent Laplace-Beltrami operator and its first nonzero eigenvalue."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import splu

from .mesh import SurfaceMesh, vertex_measures

logger = logging.getLogger(__name__)

DENSE_ORACLE_MAX = 2000
CLAMP_RTOL = 1e-12


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""

    def __init__(self, message, residual=np.nan, iterations=0):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class LaplaceOperator:
    """Generalised eigenproblem ``S v = lambda M v`` with lumped diagonal ``M``.

    Attributes
    ----------
    stiffness : scipy.sparse.csr_matrix
        Symmetric positive semidefinite cotangent matrix, zero row sums.
    mass : ndarray
        Diagonal of the lumped mass matrix (mixed Voronoi dual areas).
    clamped_edges : int
        Number of edges whose summed cotangent weight was negative beyond round-off.
        All negative weights are clamped to 0.
    """

    stiffness: sparse.csr_matrix
    mass: np.ndarray
    clamped_edges: int = 0

    @property
    def size(self) -> int:
        return len(self.mass)

    def energy(self, f) -> float:
        f = np.asarray(f, dtype=float)
        return float(f @ (self.stiffness @ f))


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    eigenvector: np.ndarray
    residual: float
    iterations: int


class Quotient(NamedTuple):
    value: float
    degenerate: bool


def edge_weights(mesh: SurfaceMesh):
    """Unique edges and their (unclamped) cotangent weights ``(cot a + cot b)/2``."""
    f = mesh.faces
    cot = mesh.face_cotangents
    # corner k is opposite the edge (k+1, k+2)
    i = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    j = np.concatenate([f[:, 2], f[:, 0], f[:, 1]])
    w = 0.5 * np.concatenate([cot[:, 0], cot[:, 1], cot[:, 2]])
    a, b = np.minimum(i, j), np.maximum(i, j)
    V = mesh.n_vertices
    W = sparse.coo_matrix((w, (a, b)), shape=(V, V)).tocsr()
    W.sum_duplicates()
    C = W.tocoo()
    return np.stack([C.row, C.col], 1), C.data


def assemble(mesh: SurfaceMesh) -> LaplaceOperator:
    """Cotangent stiffness from intrinsic edge lengths and mixed Voronoi lumped mass."""
    e, w = edge_weights(mesh)
    # weights within round-off of zero (right angles) are clamped but not counted
    neg = w < 0
    significant = w < -CLAMP_RTOL * np.abs(w).max(initial=0.0)
    if np.any(significant):
        logger.info("clamped %d negative cotangent weights", int(significant.sum()))
    w = np.where(neg, 0.0, w)
    V = mesh.n_vertices
    W = sparse.coo_matrix((np.r_[w, w], (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(V, V)).tocsr()
    S = (sparse.diags(np.asarray(W.sum(axis=1)).ravel()) - W).tocsr()
    S.sort_indices()
    return LaplaceOperator(S, vertex_measures(mesh).dual_area.copy(), int(significant.sum()))


def _remove_mean(X, m):
    return X - np.outer(np.ones(len(m)), (m @ X) / m.sum())


def _m_orthonormalize(X, m):
    G = X.T @ (m[:, None] * X)
    G = 0.5 * (G + G.T)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        w, U = np.linalg.eigh(G)
        keep = w > 1e-14 * w.max()
        return (X @ U[:, keep]) / np.sqrt(w[keep])
    return scipy.linalg.solve_triangular(L, X.T, lower=True).T


def lambda1(op: LaplaceOperator, tol: float = 1e-10, seed: int = 0, block: int = 8,
            maxiter: int = 500) -> EigenResult:
    """Smallest nonzero generalised eigenvalue by block shift-invert subspace iteration.

    The pseudo-inverse of the singular stiffness matrix is applied by grounding
    vertex 0 (one sparse LU of ``S[1:, 1:]``) and removing the mass-weighted
    mean, which deflates the constants exactly.  Ritz values come from a
    Rayleigh-Ritz step on the block each iteration.

    Raises
    ------
    ConvergenceError
        When the residual ``|(S - lambda M) v| / |M v|`` stays above ``tol``.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    S, m = op.stiffness, op.mass
    V = op.size
    if V < 3:
        raise ValueError("operator too small")
    block = max(1, min(block, V - 1))
    lu = splu(S[1:, 1:].tocsc())

    def solve(B):
        X = np.zeros_like(B)
        X[1:] = lu.solve(np.ascontiguousarray(B[1:]))
        return _remove_mean(X, m)

    rng = np.random.default_rng(seed)
    X = _m_orthonormalize(_remove_mean(rng.standard_normal((V, block)), m), m)
    res = np.inf
    for it in range(1, maxiter + 1):
        X = _m_orthonormalize(solve(m[:, None] * X), m)
        A = X.T @ (S @ X)
        A = 0.5 * (A + A.T)
        lam, Q = np.linalg.eigh(A)
        X = X @ Q
        v = X[:, 0]
        mv = m * v
        res = float(np.linalg.norm(S @ v - lam[0] * mv) / np.linalg.norm(mv))
        if res <= tol:
            v = _remove_mean(v[:, None], m)[:, 0]
            v = v / np.sqrt(v @ (m * v))
            return EigenResult(float(lam[0]), v, res, it)
    raise ConvergenceError("lambda1 did not converge", res, maxiter)


def rayleigh_quotient(op: LaplaceOperator, f) -> Quotient:
    """Quotient ``E(f - mean f) / |f - mean f|_M^2`` with a degeneracy flag for constants."""
    f = np.asarray(f, dtype=float)
    if f.shape != (op.size,):
        raise ValueError("vertex function has the wrong length")
    m = op.mass
    scale = float(np.sqrt(f @ (m * f)))
    if scale == 0:
        raise ValueError("zero function has no Rayleigh quotient")
    g = f - (m @ f) / m.sum()
    den = float(g @ (m * g))
    if den <= (1e-12 * scale) ** 2:
        return Quotient(0.0, True)
    return Quotient(op.energy(g) / den, False)


def dense_spectrum_oracle(op: LaplaceOperator) -> np.ndarray:
    """Full generalised spectrum by a dense symmetric solve of ``M^-1/2 S M^-1/2``."""
    if op.size > DENSE_ORACLE_MAX:
        raise ValueError(f"dense oracle limited to {DENSE_ORACLE_MAX} vertices")
    d = 1.0 / np.sqrt(op.mass)
    A = d[:, None] * op.stiffness.toarray() * d[None, :]
    return scipy.linalg.eigh(0.5 * (A + A.T), eigvals_only=True)
