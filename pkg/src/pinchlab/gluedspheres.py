"""Two nearly unit spheres joined by a catenoid neck.

Both sheets are graphs ``z = rho^{+-}(r)`` over ``r`` = distance to the
z-axis.  Near the axis each sheet starts on the catenoid
``1 +- eps^2 arccosh(r/eps^2)`` (throat ``r = eps^2``, ``z = 1``), flattens
to the plane ``z = 1 +- a0`` at ``r = 2 eps`` and joins the sphere of
radius ``r0^{+-}`` centred at ``(r, z) = (3 eps, 0)`` at ``r = 3 eps``.  The
outer sphere (``+``) encloses the inner one (``-``); the neck joins them at
the top.  Both profiles are C^2.

The displayed profile only covers the upper part of each sphere down to the
equator.  The lower part follows the sphere circle and is closed at the
bottom by the mirror image of the top (second gluing polynomial, then the
plane ``z = -(1 +- a0)``), which keeps the surface C^2 and the poles
smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, sparse
from scipy.sparse.csgraph import dijkstra

from .curvature import CurvatureField, norm_B_q, shape_operator
from .mesh import MeshError, SurfaceMesh, aspect_ratio, generate_revolution, triangle_quality, vertex_measures
from .spaceform import AmbientModel
from .spectral import assemble, rayleigh_quotient

EPS_MAX = 0.25


@dataclass(frozen=True)
class ProfileCoefficients:
    eps: float
    a0: float
    a1: float
    a2: float
    b1_plus: float
    b2_plus: float
    b1_minus: float
    b2_minus: float
    r0_plus: float
    r0_minus: float

    def b(self, sheet: int) -> tuple[float, float]:
        return (self.b1_plus, self.b2_plus) if sheet > 0 else (self.b1_minus, self.b2_minus)

    def r0(self, sheet: int) -> float:
        return self.r0_plus if sheet > 0 else self.r0_minus

    def r_max(self, sheet: int) -> float:
        return 3 * self.eps + self.r0(sheet)


def coefficients(eps: float) -> ProfileCoefficients:
    """Closed-form coefficients; the defining identities are re-checked to 1e-12."""
    if not 0 < eps <= EPS_MAX:
        raise ValueError(f"eps must lie in (0, {EPS_MAX}]")
    e2 = eps * eps
    w = (1 - e2) ** 1.5
    a1 = (2 - 3 * e2) / (3 * eps * w)
    a2 = (1 - 2 * e2) / (4 * e2 * w)
    a0 = a1 * eps**3 - a2 * eps**4 + e2 * math.acosh(1 / eps)
    r0 = {}
    for s in (1, -1):
        base = 1 + s * a0
        r0[s] = base / 2 + 0.5 * math.sqrt(base * base + e2 / 3)
        # r0 solves r^2 - (1 +- a0) r - eps^2/12 = 0
        if abs(r0[s] ** 2 - base * r0[s] - e2 / 12) > 1e-12:
            raise ArithmeticError("r0 identity check failed")
    c = ProfileCoefficients(eps, a0, a1, a2, 1 / (3 * eps * r0[1]), -1 / (4 * e2 * r0[1]),
                            1 / (3 * eps * r0[-1]), -1 / (4 * e2 * r0[-1]), r0[1], r0[-1])
    for s in (1, -1):
        jump = abs(_first_gluing(c, s, eps)[0] - _catenoid(c, s, eps)[0])
        jump += abs(_second_gluing(c, s, 3 * eps)[0] - _sphere(c, s, 3 * eps)[0])
        if jump > 1e-12:
            raise ArithmeticError("profile continuity check failed")
    return c


# each branch returns (z, z', z'')

def _catenoid(c, s, r):
    e2 = c.eps**2
    q = np.sqrt(np.maximum(r * r - e2 * e2, 0.0))
    with np.errstate(divide="ignore"):
        return (1 + s * e2 * np.arccosh(np.maximum(r / e2, 1.0)), s * e2 / q, -s * e2 * r / q**3)


def _first_gluing(c, s, r):
    u = r - 2 * c.eps
    return (1 + s * (c.a1 * u**3 + c.a2 * u**4) + s * c.a0,
            s * (3 * c.a1 * u**2 + 4 * c.a2 * u**3),
            s * (6 * c.a1 * u + 12 * c.a2 * u**2))


def _second_gluing(c, s, r):
    b1, b2 = c.b(s)
    u = r - 2 * c.eps
    return 1 + b1 * u**3 + b2 * u**4 + s * c.a0, 3 * b1 * u**2 + 4 * b2 * u**3, 6 * b1 * u + 12 * b2 * u**2


def _sphere(c, s, r):
    r0 = c.r0(s)
    x = r - 3 * c.eps
    f = np.sqrt(np.maximum(r0 * r0 - x * x, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        return f, -x / f, -r0 * r0 / f**3


def _region(c, s, r):
    e = c.eps
    r = np.asarray(r, dtype=float)
    if np.any(r < e * e * (1 - 1e-12)) or np.any(r > c.r_max(s) * (1 + 1e-12)):
        raise ValueError("r outside the profile domain")
    return np.select([r <= e, r <= 2 * e, r <= 3 * e], [1, 2, 3], 4)


def profile_jet(c: ProfileCoefficients, sheet: int, r):
    """``(z, z', z'')`` of the upper profile of ``sheet`` (+1 outer, -1 inner)."""
    r = np.asarray(r, dtype=float)
    flat = r.reshape(-1)
    reg = _region(c, sheet, flat)
    out = np.zeros((3, flat.size))
    for k, fn in enumerate((_catenoid, _first_gluing, _second_gluing, _sphere), start=1):
        m = reg == k
        if np.any(m):
            vals = fn(c, sheet, flat[m])
            for j in range(3):
                out[j][m] = vals[j]
    return out.reshape((3,) + r.shape)


def profile(c: ProfileCoefficients, sheet: int, r):
    """Height of the upper profile of ``sheet`` at distance ``r`` from the axis."""
    z = profile_jet(c, sheet, r)[0]
    return float(z) if np.ndim(r) == 0 else z


def exact_curvatures(c: ProfileCoefficients, sheet: int, r):
    """Principal curvatures (meridian, parallel) of the upper profile with this package's orientation.

    The outer sheet is oriented by the upward normal near the neck, the inner
    sheet by the downward one, so the outer sphere has positive curvatures.
    """
    z, dz, d2z = profile_jet(c, sheet, r)
    q = 1 + dz * dz
    km = -d2z / q**1.5
    kp = -dz / (np.asarray(r) * np.sqrt(q))
    return sheet * km, sheet * kp


def analytic_regional_curvatures(c: ProfileCoefficients, sheet: int, r):
    """Leading-order principal curvatures of the four regions, dropping O(eps^2).

    Values follow the sign table of the source construction (both sheets with
    the same normalisation); multiply by ``sheet`` for this package's
    orientation on regions (i) and (iv) of the inner sheet.
    """
    e = c.eps
    reg = int(_region(c, sheet, r))
    if reg == 1:
        return e * e / r**2, -e * e / r**2
    if reg == 2:
        t = r / e - 1
        return sheet * (1 + 2 * t - 3 * t * t), -sheet * (1 - t) ** 2
    if reg == 3:
        t = r / e - 2
        return -2 * t + 3 * t * t, (-t * t + t**3) / (2 + t)
    return 1.0, 1 - 3 * e / r


def neck_B2_integral(eps: float) -> float:
    """``int_neck |B|^2 = 8 pi sqrt(1 - eps^2)``, cross-checked by quadrature to 0.5%."""
    if not 0 < eps <= EPS_MAX:
        raise ValueError(f"eps must lie in (0, {EPS_MAX}]")
    exact = 8 * math.pi * math.sqrt(1 - eps * eps)
    quad = neck_B2_quadrature(eps)
    if abs(quad - exact) > 5e-3 * exact:
        raise ArithmeticError("neck |B|^2 quadrature disagrees with the closed form")
    return exact


def neck_B2_quadrature(eps: float) -> float:
    """Quadrature of ``2 int int 2 eps^4/r^4 * r^2/sqrt(r^2 - eps^4) dr dtheta`` over ``[eps^2, eps]``."""
    e4 = eps**4
    e2 = eps * eps

    # algebraic weight (r - eps^2)^{-1/2} carries the endpoint singularity
    def f(r):
        return 2 * 2 * math.pi * 2 * e4 / r**2 / math.sqrt(r + e2)

    val, _ = integrate.quad(f, e2, eps, weight="alg", wvar=(-0.5, 0.0), epsabs=0, epsrel=1e-12, limit=200)
    return val


def courtois_cutoff(eps: float, s):
    """Logarithmic ramp: 0 below ``eps``, 1 above ``sqrt(eps)``, ``-2 log(s/eps)/log(eps)`` between."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    s_arr = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        ramp = -2.0 / math.log(eps) * np.log(np.maximum(s_arr, eps) / eps)
    out = np.clip(ramp, 0.0, 1.0)
    out = np.where(s_arr >= math.sqrt(eps), 1.0, out)
    return float(out) if np.ndim(s) == 0 else out


# -- meshing --------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyParams:
    eps: float
    l: int = 1
    p: int = 2
    resolution: tuple = (128, 128)

    def __post_init__(self):
        if not 0 < self.eps <= EPS_MAX:
            raise ValueError(f"eps must lie in (0, {EPS_MAX}]")
        lmax = math.ceil(math.sqrt(math.log(1 / self.eps)))
        if not 1 <= self.l <= lmax:
            raise ValueError(f"l must lie in [1, {lmax}]")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        n_r, n_t = self.resolution
        if n_r < 16 or n_t < 16:
            raise ValueError("resolution must be at least (16, 16)")


class GluedMesh(SurfaceMesh):
    """Surface mesh of the family carrying per-vertex sheet labels.

    Attributes
    ----------
    sheet : ndarray
        +1 on the outer sheet, -1 on the inner sheet, 0 on the throat ring.
    throat : ndarray
        Indices of the throat ring ``{r = eps^2, z = 1}``.
    coeffs : ProfileCoefficients
    """

    def __init__(self, vertices, faces, sheet, throat, coeffs, params):
        super().__init__(vertices, faces, AmbientModel(0.0))
        self.sheet = np.asarray(sheet)
        self.throat = np.asarray(throat)
        self.coeffs = coeffs
        self.params = params

    @property
    def axis_distance(self) -> np.ndarray:
        return np.hypot(self.vertices[:, 0], self.vertices[:, 1])

    @property
    def neck_faces(self) -> np.ndarray:
        """Faces with every vertex on the catenoid part ``r <= eps`` next to the throat."""
        e = self.coeffs.eps
        r = self.axis_distance[self.faces]
        z = self.vertices[self.faces, 2]
        return np.flatnonzero(np.all((r <= e * (1 + 1e-9)) & (np.abs(z - 1) < e), axis=1))

    @property
    def min_quality(self) -> float:
        return float(triangle_quality(self).min())

    @property
    def neck_max_aspect(self) -> float:
        return float(aspect_ratio(self)[self.neck_faces].max())


def _resample(fun, u0, u1, spacing, dense=4001):
    """Parameters in ``[u0, u1]`` placing points of ``fun(u) -> (r, z)`` at arc spacing ``spacing(r)``."""
    u = np.linspace(u0, u1, dense)
    r, z = fun(u)
    seg = np.hypot(np.diff(r), np.diff(z))
    rm = 0.5 * (r[1:] + r[:-1])
    count = np.concatenate([[0.0], np.cumsum(seg / spacing(rm))])
    m = max(1, int(round(count[-1])))
    target = count[-1] * np.arange(m + 1) / m
    uu = np.interp(target, count, u)
    uu[0], uu[-1] = u0, u1
    return uu


def meridian(c: ProfileCoefficients, n_r: int, n_theta: int):
    """Closed meridian polyline with sheet labels and the index of the throat sample."""
    e = c.eps
    ang = 2 * math.pi / n_theta
    h_max = math.pi / n_r

    def neck_spacing(r):
        return np.minimum(h_max, np.maximum(ang * r, ang * e * e))

    def cap_spacing(r):
        return np.minimum(h_max, np.maximum(ang * r, min(h_max, e / 2)))

    pieces = []  # (points (k,2), label); each piece runs in traversal order

    def add(fun, u0, u1, spacing, label):
        uu = _resample(fun, u0, u1, spacing)
        r, z = fun(uu)
        pieces.append((np.stack([r, z], 1), label))

    def top_graph(s, branch):
        return lambda r: (r, branch(c, s, r)[0])

    def bottom_graph(s, branch):
        return lambda r: (r, -branch(c, s, r)[0])

    def arc(s):
        r0 = c.r0(s)
        return lambda th: (3 * e + r0 * np.cos(th), r0 * np.sin(th))

    T = math.acosh(1 / e)
    # outer sheet: bottom pole -> equator -> top -> neck throat
    s = 1
    add(lambda r: (r, -np.full_like(r, 1 + c.a0)), 0.0, 2 * e, cap_spacing, s)
    add(bottom_graph(s, _second_gluing), 2 * e, 3 * e, neck_spacing, s)
    add(arc(s), -math.pi / 2, 0.0, neck_spacing, s)
    add(arc(s), 0.0, math.pi / 2, neck_spacing, s)
    add(top_graph(s, _second_gluing), 3 * e, 2 * e, neck_spacing, s)
    add(top_graph(s, _first_gluing), 2 * e, e, neck_spacing, s)
    add(lambda t: (e * e * np.cosh(t), 1 + e * e * t), T, 0.0, neck_spacing, s)
    # inner sheet: throat -> top -> equator -> bottom pole
    s = -1
    add(lambda t: (e * e * np.cosh(t), 1 - e * e * t), 0.0, T, neck_spacing, s)
    add(top_graph(s, _first_gluing), e, 2 * e, neck_spacing, s)
    add(top_graph(s, _second_gluing), 2 * e, 3 * e, neck_spacing, s)
    add(arc(s), math.pi / 2, 0.0, neck_spacing, s)
    add(arc(s), 0.0, -math.pi / 2, neck_spacing, s)
    add(bottom_graph(s, _second_gluing), 3 * e, 2 * e, neck_spacing, s)
    add(lambda r: (r, -np.full_like(r, 1 - c.a0)), 2 * e, 0.0, cap_spacing, s)

    pts, labels = [], []
    throat = None
    for k, (p, lab) in enumerate(pieces):
        if k > 0:
            gap = np.hypot(*(p[0] - pts[-1][-1]))
            if gap > 1e-9:
                raise MeshError(f"profile pieces do not join (gap {gap:.2e})")
            p = p[1:]
        if k == 7:
            throat = sum(len(q) for q in pts) - 1
        pts.append(p)
        labels.append(np.full(len(p), lab))
    mer = np.vstack(pts)
    lab = np.concatenate(labels)
    lab[throat] = 0
    # clean the poles and the throat exactly
    mer[0, 0] = mer[-1, 0] = 0.0
    mer[throat] = (e * e, 1.0)
    return mer, lab, throat


def build_mesh(params: FamilyParams) -> GluedMesh:
    """Closed genus-0 mesh of the family (one neck, two spheres).

    Raises
    ------
    NotImplementedError
        For more than one neck or more than two spheres.
    MeshError
        When fewer than 8 rings resolve the neck ``[eps^2, eps]``.
    """
    if params.l != 1:
        raise NotImplementedError("multi-neck gluing is not implemented")
    if params.p != 2:
        raise NotImplementedError("gluing more than two spheres is not implemented")
    c = coefficients(params.eps)
    n_r, n_t = params.resolution
    mer, lab, throat = meridian(c, n_r, n_t)
    neck_rings = int(np.sum((mer[:, 0] >= c.eps**2) & (mer[:, 0] <= c.eps) & (lab >= 0)))
    if neck_rings < 8:
        raise MeshError(f"neck under-resolved: {neck_rings} rings in [eps^2, eps]")
    base = generate_revolution(AmbientModel(0.0), mer, n_t, caps=True)
    # ring k of the meridian occupies vertices 1 + (k-1) n_t ... (pole first)
    ring_label = np.repeat(lab[1:-1], n_t)
    sheet = np.concatenate([[lab[0]], ring_label, [lab[-1]]])
    start = 1 + (throat - 1) * n_t
    throat_idx = np.arange(start, start + n_t)
    return GluedMesh(base.vertices, base.faces, sheet, throat_idx, c, params)


def lambda1_upper_bound_via_test_function(mesh: GluedMesh, eps: float | None = None, op=None) -> float:
    """Rayleigh quotient of ``f = f0 chi_eps(d)`` with ``f0 = +-1`` on the two sheets.

    ``d`` is the edge-graph distance to the throat ring.
    """
    if not hasattr(mesh, "sheet"):
        raise ValueError("mesh carries no sheet labelling")
    eps = mesh.coeffs.eps if eps is None else eps
    op = assemble(mesh) if op is None else op
    A = mesh.adjacency.tocoo()
    w = mesh.ambient.distance(mesh.vertices[A.row], mesh.vertices[A.col])
    G = sparse.csr_matrix((w, (A.row, A.col)), shape=A.shape)
    d = dijkstra(G, directed=False, indices=mesh.throat, min_only=True)
    f = np.sign(mesh.sheet) * courtois_cutoff(eps, d)
    return rayleigh_quotient(op, f).value


def neck_B2_discrete(mesh: GluedMesh, field: CurvatureField | None = None) -> float:
    """Dual-area sum of ``|B|^2`` over vertices with ``r <= eps`` (boundary ring at half weight)."""
    field = shape_operator(mesh) if field is None else field
    m = vertex_measures(mesh).dual_area
    r = mesh.axis_distance
    e = mesh.coeffs.eps
    w = np.where(r < e * (1 - 1e-9), 1.0, np.where(r <= e * (1 + 1e-9), 0.5, 0.0))
    return float(np.sum(w * m * field.B_norm**2))


def bq_slope(eps_list, norms) -> float:
    """Least-squares slope of ``log norms`` against ``log eps``."""
    x = np.log(np.asarray(eps_list, dtype=float))
    y = np.log(np.asarray(norms, dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two samples")
    return float(np.polyfit(x, y, 1)[0])


def bq_blowup_rate(eps_list, q: float, resolution=(128, 128)) -> float:
    """Slope of ``log ||B||_q`` against ``log eps`` over freshly built meshes."""
    if len(eps_list) < 3:
        raise ValueError("need at least three eps values")
    norms = []
    for e in eps_list:
        M = build_mesh(FamilyParams(e, resolution=resolution))
        norms.append(norm_B_q(shape_operator(M), vertex_measures(M), q))
    return bq_slope(eps_list, norms)
