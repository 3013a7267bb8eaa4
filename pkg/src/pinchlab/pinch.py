"""Pinching diagnostics assembled into a single report.

Normalised integrals use ``(1/|M|) sum_v m_v f(v)`` with the mesh's dual
areas.  Vector fields live in per-vertex normal coordinates, see
:class:`pinchlab.barycenter.PositionField`.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import barycenter, curvature, spectral
from .mesh import SurfaceMesh, VertexMeasure, hausdorff_to_geodesic_sphere, vertex_measures
from .spaceform import DomainError, c_delta, cot_delta, s_delta, s_delta_inverse

logger = logging.getLogger(__name__)

SCHEMA = "pinchlab-report/1"
SLACK = 0.02


class StageError(RuntimeError):
    """A numerical failure tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


def spectral_pinch(lambda1: float, h_infty: float, delta: float, n: int = 2) -> tuple[float, float]:
    """Signed defect ``n (delta + H^2) / lambda1 - 1`` and ``R0 = s^-1(1/sqrt(delta + H^2))``."""
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    h2 = delta + h_infty**2
    if h2 <= 0:
        raise DomainError("delta + h_infty^2 must be positive")
    eps = n * h2 / lambda1 - 1.0
    return eps, float(s_delta_inverse(delta, 1.0 / math.sqrt(h2)))


def l2_pinch(field: barycenter.PositionField, measure: VertexMeasure, h: float) -> float:
    """``h^2 ||X||_2^2 - 1`` with the normalised L2 norm."""
    return h * h * measure.mean(np.sum(field.X**2, axis=1)) - 1.0


def tangential_bound_check(field, measure: VertexMeasure, h_infty: float, eps_L2: float,
                           slack: float = SLACK) -> tuple[float, float, bool]:
    """``||X_tan||_2^2`` against ``2 max(eps_L2, 0) / h_infty^2``."""
    xt = measure.mean(np.sum(field.X_tan**2, axis=1))
    bound = 2.0 * max(eps_L2, 0.0) / h_infty**2
    return xt, bound, bool(xt <= bound + slack)


def psi_field(field, h: float) -> tuple[np.ndarray, float]:
    """``psi = |X|^{1/2} | |X| - 1/h |`` and its maximum."""
    if not h > 0:
        raise ValueError("h must be positive")
    nx = field.norm_X if hasattr(field, "norm_X") else np.asarray(field, dtype=float)
    psi = np.sqrt(nx) * np.abs(nx - 1.0 / h)
    return psi, float(psi.max())


def heintze_integrated_defect(mesh: SurfaceMesh, measure: VertexMeasure, field, H) -> float:
    """``int (c(r) - |H| s(r))``, not normalised by area."""
    d = mesh.ambient.delta
    r = field.r
    return measure.integral(c_delta(d, r) - np.abs(H) * s_delta(d, r))


def laplacian_r(delta: float, n: int, field, mode: str = "ambient") -> np.ndarray:
    """Per-vertex ``Delta r`` from the exact space-form Hessian ``(c/s)(r) (g - dr^2)``.

    ``mode="ambient"`` is the full ambient Laplacian ``n c/s(r)``;
    ``mode="tangential"`` traces the Hessian over ``TM`` only, giving
    ``(c/s)(r) (n - |grad^M r|^2)``.
    """
    cs = cot_delta(delta, field.r)
    if mode == "ambient":
        return n * cs
    if mode == "tangential":
        return cs * (n - field.grad_r_tangential**2)
    raise ValueError(f"unknown mode {mode!r}")


def laplace_deviation(mesh: SurfaceMesh, measure: VertexMeasure, field, H, h: float,
                      mode: str = "ambient") -> float:
    """``(1/|M|) int | c/s(R0) - Delta r / n |`` with ``s(R0) = 1/h``.

    ``c/s(R0) = sqrt(h^2 - delta)``.  ``H`` is accepted for interface
    symmetry; the Hessian of ``r`` is exact in a space form.
    """
    d = mesh.ambient.delta
    n = mesh.ambient.n
    ref = math.sqrt(max(h * h - d, 0.0))
    lap = laplacian_r(d, n, field, mode)
    return measure.mean(np.abs(ref - lap / n))


def yw_diagnostics(field, H, nu, h: float, h_infty: float, delta: float,
                   measure: VertexMeasure) -> tuple[float, float]:
    """Normalised squared L2 norms of ``Y = H_inf^2 X - H c nu`` and
    ``W = |X|^{1/2} (delta X + H c nu - h X/|X|)``; both vanish on geodesic spheres."""
    X = field.X
    c = c_delta(delta, field.r)
    Hc = (np.asarray(H) * c)[:, None] * nu
    Yf = h_infty**2 * X - Hc
    nx = np.linalg.norm(X, axis=1)
    Wf = np.sqrt(nx)[:, None] * (delta * X + Hc - h * X / nx[:, None])
    return measure.mean(np.sum(Yf**2, axis=1)), measure.mean(np.sum(Wf**2, axis=1))


def radial_projection_distortion(mesh: SurfaceMesh, p0, R0: float, field=None):
    """Distortion of ``F(x) = exp_p0(R0 log_p0(x)/|log_p0(x)|)`` on edges.

    Returns
    -------
    grad_r_infty : float
        ``max |grad^M r|``.
    distortion : float
        ``max_edges |(len F(e) / len e)^2 - 1|``.
    star_shaped : bool
        ``<grad r, nu> > 0`` at every vertex (radial projection is then a local diffeomorphism).
    """
    model = mesh.ambient
    p0 = np.asarray(p0, dtype=float)
    field = barycenter.position_field(mesh, p0) if field is None else field
    P = np.broadcast_to(p0, mesh.vertices.shape)
    lg = model.log(P, mesh.vertices)
    nrm = model.norm(lg)
    proj = model.exp(P, (R0 / nrm)[:, None] * lg)
    e = mesh.edges
    l0 = model.distance(mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]])
    l1 = model.distance(proj[e[:, 0]], proj[e[:, 1]])
    dist = float(np.max(np.abs((l1 / l0) ** 2 - 1.0)))
    star = bool(np.all(field.X_normal > 0))
    return float(field.grad_r_tangential.max()), dist, star


@dataclass
class PinchReport:
    lambda1: float
    h_infty: float
    delta: float
    h: float
    R0: float
    eps_spec: float
    eps_L2: float
    X_l2: float
    Xtan_l2sq: float
    Xtan_bound: float
    psi_infty: float
    position_dev: float
    heintze_defect: float
    laplace_dev: float
    laplace_dev_tangential: float
    Y_l2sq: float
    W_l2sq: float
    grad_r_infty: float
    hausdorff: float
    dF_distortion: float
    area: float
    A: float
    R_ball: float
    B_l2: float
    B_linf: float
    p0: list
    n_vertices: int
    n_faces: int
    clamped_edges: int
    lambda1_residual: float
    center_residual: float
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"schema": SCHEMA}
        d.update(asdict(self))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, allow_nan=False) + "\n"


@dataclass
class ReportData:
    """Per-vertex arrays behind a report (for CSV export)."""

    H: np.ndarray
    B_norm: np.ndarray
    norm_X: np.ndarray
    psi: np.ndarray
    laplace_r: np.ndarray


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def hypothesis_flags(delta: float, R: float, area: float, h_infty: float, n: int = 2) -> list[str]:
    """Names of violated size and curvature hypotheses (empty when all hold)."""
    flags = []
    if delta > 0:
        sq = math.sqrt(delta)
        if R > math.pi / (8 * sq) * (1 + 1e-9):
            flags.append("radius_exceeds_pi_over_8sqrt_delta")
        if area > 4 * math.pi * s_delta(delta, math.pi / (4 * sq)) ** 2 * (1 + 1e-9):
            flags.append("area_exceeds_cap_bound")
    if delta + h_infty**2 <= 0:
        flags.append("invalid_regime")
        return flags
    if delta <= 0 or 2 * R < math.pi / math.sqrt(delta):
        lower = cot_delta(delta, 2 * R)
        if h_infty < lower * (1 - 0.03):
            flags.append("h_infty_below_support_bound")
        ratio = h_infty / math.sqrt(delta + h_infty**2)
        c2 = c_delta(delta, 2 * R)
        if not (min(1.0, c2) - 0.03 <= ratio <= max(1.0, c2) + 0.03):
            flags.append("h_ratio_out_of_bounds")
    return flags


def assemble_report(mesh: SurfaceMesh, tol: float = 1e-10, seed: int = 0,
                    return_data: bool = False):
    """Run every diagnostic on ``mesh`` and collect the scalars.

    Raises
    ------
    StageError
        Tagged with the failing stage.
    """
    model = mesh.ambient
    d, n = model.delta, model.n
    measure = vertex_measures(mesh)
    area = measure.total
    op = _stage("spectral", spectral.assemble, mesh)
    eig = _stage("spectral", spectral.lambda1, op, tol, seed)
    H = _stage("curvature", curvature.mean_curvature, mesh, measure)
    cf = _stage("curvature", curvature.shape_operator, mesh)
    hinf = curvature.h_infty(H)
    flags = []
    if op.clamped_edges:
        flags.append("clamped_cotangent_weights")
    try:
        eps_spec, R0 = spectral_pinch(eig.lambda1, hinf, d, n)
    except DomainError as exc:
        raise StageError("pinch", exc) from exc
    h = math.sqrt(d + hinf**2)
    center = _stage("center", barycenter.solve_center, mesh, measure, max(tol, 1e-12))
    pf = _stage("position", barycenter.position_field, mesh, center.p0)
    R_ball = float(pf.r.max())
    flags += hypothesis_flags(d, R_ball, area, hinf, n)
    eps_L2 = l2_pinch(pf, measure, h)
    xt, bound, ok = tangential_bound_check(pf, measure, hinf, eps_L2)
    if not ok and eps_spec <= 0.5:
        flags.append("tangential_bound_exceeded")
    psi, psi_inf = psi_field(pf, h)
    Yl, Wl = yw_diagnostics(pf, H, pf.nu, h, hinf, d, measure)
    grad_inf, distortion, star = _stage("projection", radial_projection_distortion, mesh, center.p0, R0, pf)
    if not star:
        flags.append("not_star_shaped")
    haus = _stage("hausdorff", hausdorff_to_geodesic_sphere, mesh, center.p0, R0)
    report = PinchReport(
        lambda1=eig.lambda1, h_infty=hinf, delta=float(d), h=h, R0=R0,
        eps_spec=eps_spec, eps_L2=eps_L2,
        X_l2=math.sqrt(measure.mean(pf.norm_X**2)),
        Xtan_l2sq=xt, Xtan_bound=bound, psi_infty=psi_inf,
        position_dev=float(np.max(np.abs(h * pf.norm_X - 1.0))),
        heintze_defect=heintze_integrated_defect(mesh, measure, pf, H),
        laplace_dev=laplace_deviation(mesh, measure, pf, H, h),
        laplace_dev_tangential=laplace_deviation(mesh, measure, pf, H, h, mode="tangential"),
        Y_l2sq=Yl, W_l2sq=Wl, grad_r_infty=grad_inf, hausdorff=haus, dF_distortion=distortion,
        area=area, A=math.sqrt(area) * hinf, R_ball=R_ball,
        B_l2=curvature.norm_B_q(cf, measure, 2), B_linf=curvature.norm_B_q(cf, measure, math.inf),
        p0=[float(x) for x in center.p0], n_vertices=mesh.n_vertices, n_faces=mesh.n_faces,
        clamped_edges=op.clamped_edges, lambda1_residual=eig.residual,
        center_residual=center.balance_residual, flags=flags,
    )
    for k, v in asdict(report).items():
        if isinstance(v, float) and not math.isfinite(v):
            raise StageError("report", ValueError(f"non-finite report entry {k}"))
    if return_data:
        data = ReportData(H, cf.B_norm, pf.norm_X, psi, laplacian_r(d, n, pf))
        return report, data
    return report
