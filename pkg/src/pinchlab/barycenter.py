"""Center of mass for the modified distance energy and the position field.

The energy ``F(q) = int Phi(dist(q, x)) dx`` with ``Phi' = s_delta`` has
gradient ``-Y(q)`` where ``Y(q) = int (s(r)/r) log_q(x) dx``.  In a space
form ``Hess Phi(r) = c(r) g`` exactly, so ``Hess F = (int c(r)) g`` and the
Newton step ``exp_q(Y / int c(r))`` is available in closed form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import SurfaceMesh, VertexMeasure, vertex_measures
from .spaceform import DomainError, c_delta, phi_delta, s_delta
from .spectral import ConvergenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CenterResult:
    p0: np.ndarray
    energy: float
    gradient_norm: float
    iterations: int
    balance_residual: float
    trace: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class PositionField:
    """Position vector ``X = s(r) grad r`` of the vertices relative to ``p0``.

    Vectors are stored in each vertex's orthonormal frame (normal coordinates),
    so Euclidean norms and inner products apply in every chart.
    """

    X: np.ndarray
    X_tan: np.ndarray
    X_normal: np.ndarray
    r: np.ndarray
    nu: np.ndarray
    p0: np.ndarray

    @property
    def norm_X(self) -> np.ndarray:
        return np.linalg.norm(self.X, axis=1)

    @property
    def grad_r_tangential(self) -> np.ndarray:
        """``|grad^M r| = |X_tan| / s(r)``."""
        s = np.linalg.norm(self.X, axis=1)
        return np.linalg.norm(self.X_tan, axis=1) / s


def _measure(mesh, measure):
    return vertex_measures(mesh) if measure is None else measure


def _distances(mesh, q):
    model = mesh.ambient
    r = model.distance(mesh.vertices, q)
    if model.delta > 0 and np.any(r >= 0.5 * math.pi / math.sqrt(model.delta)):
        raise DomainError("all distances must stay below pi/(2 sqrt(delta))")
    return r


def energy(mesh: SurfaceMesh, measure: VertexMeasure | None, q) -> float:
    """Mass-weighted ``sum m_v Phi(dist(q, v))``."""
    m = _measure(mesh, measure).dual_area
    q = np.asarray(q, dtype=float)
    return float(m @ phi_delta(mesh.ambient.delta, _distances(mesh, q)))


def gradient_Y(mesh: SurfaceMesh, measure: VertexMeasure | None, q) -> np.ndarray:
    """``Y(q) = sum m_v (s(r)/r) log_q(v)``, the negative energy gradient (ambient vector at q)."""
    m = _measure(mesh, measure).dual_area
    q = np.asarray(q, dtype=float)
    r = _distances(mesh, q)
    if np.any(r < 1e-14):
        raise DomainError("gradient undefined when q coincides with a vertex")
    lg = mesh.ambient.log(np.broadcast_to(q, mesh.vertices.shape), mesh.vertices)
    w = m * s_delta(mesh.ambient.delta, r) / r
    return w @ lg


def _start_point(mesh, m):
    return mesh.ambient.project((m[:, None] * mesh.vertices).sum(axis=0) / m.sum())


def solve_center(mesh: SurfaceMesh, measure: VertexMeasure | None = None, tol: float = 1e-10,
                 maxiter: int = 1000, start=None) -> CenterResult:
    """Minimise the energy by safeguarded Newton steps on the model.

    Stops when ``|Y| / area <= tol``.  Each step is ``exp_q(t Y / int c(r))``
    with ``t`` halved until the energy decreases.
    """
    measure = _measure(mesh, measure)
    m = measure.dual_area
    area = measure.total
    model = mesh.ambient
    d = model.delta
    q = _start_point(mesh, m) if start is None else np.asarray(start, dtype=float)
    E = energy(mesh, measure, q)
    trace = [E]
    for it in range(maxiter + 1):
        Y = gradient_Y(mesh, measure, q)
        gnorm = float(model.norm(Y))
        if gnorm / area <= tol:
            res = balance_residual(mesh, measure, q)
            return CenterResult(q, E, gnorm, it, res, tuple(trace))
        if it == maxiter:
            break
        hess = float(m @ c_delta(d, _distances(mesh, q)))
        if hess <= 0:
            raise ConvergenceError("energy Hessian not positive at iterate", gnorm / area, it)
        step = Y / hess
        t = 1.0
        for _ in range(60):
            cand = model.exp(q, t * step)
            try:
                Ec = energy(mesh, measure, cand)
            except DomainError:
                Ec = math.inf
            # accept ties at round-off level near the minimum
            if Ec <= E + 1e-15 * abs(E):
                break
            t *= 0.5
        else:
            raise ConvergenceError("line search failed in solve_center", gnorm / area, it)
        q, E = cand, Ec
        trace.append(E)
    raise ConvergenceError("solve_center exceeded the iteration cap", gnorm / area, maxiter)


def position_field(mesh: SurfaceMesh, p0) -> PositionField:
    """``X = -(s(r)/r) log_v(p0)`` per vertex together with its normal/tangential split."""
    model = mesh.ambient
    p0 = np.asarray(p0, dtype=float)
    r = model.distance(mesh.vertices, p0)
    if np.any(r < 1e-14):
        raise DomainError("a vertex coincides with the center")
    loc = model.to_frame(mesh.frames, model.log(mesh.vertices, np.broadcast_to(p0, mesh.vertices.shape)))
    ln = np.linalg.norm(loc, axis=1)
    X = -(s_delta(model.delta, r) / ln)[:, None] * loc
    nu = mesh.normals_local
    Xn = np.einsum("ij,ij->i", X, nu)
    X_tan = X - Xn[:, None] * nu
    return PositionField(X, X_tan, Xn, r, nu, p0)


def balance_residual(mesh: SurfaceMesh, measure: VertexMeasure | None, p0) -> float:
    """Norm of ``sum m_v (s(r)/r) x_v`` in normal coordinates at ``p0``."""
    model = mesh.ambient
    p0 = np.asarray(p0, dtype=float)
    Y = gradient_Y(mesh, measure, p0)
    return float(np.linalg.norm(model.to_frame(model.frame(p0), Y)))
