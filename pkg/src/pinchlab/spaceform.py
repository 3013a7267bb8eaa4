"""Constant-curvature ambient geometry.

The model space of curvature ``delta`` is realised in an embedding chart:

* ``delta == 0``: Euclidean coordinates in R^{n+1}.
* ``delta > 0``: the sphere of radius ``1/sqrt(delta)`` in R^{n+2}.
* ``delta < 0``: the upper sheet of the hyperboloid ``<x, x>_L = 1/delta`` in
  Minkowski space R^{1, n+1}; coordinate 0 is the timelike one.

For the curved charts the base point ``origin()`` is ``scale * e_0`` and the
tangent space there is spanned by ``e_1 .. e_{n+1}``.  Tangent frames at other
points are obtained by parallel transport from the origin, so frame
coordinates vary smoothly and keep a consistent orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SERIES_CUTOFF = 1e-4


class DomainError(ValueError):
    """Raised when an argument leaves the domain of a delta-trig function."""


def _check_radius(delta, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radial argument must be nonnegative")
    if delta > 0 and np.any(r >= math.pi / math.sqrt(delta)):
        raise DomainError(f"radial argument must be < pi/sqrt(delta) = {math.pi / math.sqrt(delta)}")
    return r


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def s_delta(delta: float, r):
    """delta-sine: sin(sqrt(d) r)/sqrt(d), r, or sinh(sqrt(-d) r)/sqrt(-d)."""
    r_arr = _check_radius(delta, r)
    if delta > 0:
        k = math.sqrt(delta)
        out = np.sin(k * r_arr) / k
    elif delta < 0:
        k = math.sqrt(-delta)
        out = np.sinh(k * r_arr) / k
    else:
        out = r_arr.copy()
    return _scalar_or_array(out, r)


def c_delta(delta: float, r):
    """delta-cosine, the derivative of :func:`s_delta`."""
    r_arr = _check_radius(delta, r)
    if delta > 0:
        out = np.cos(math.sqrt(delta) * r_arr)
    elif delta < 0:
        out = np.cosh(math.sqrt(-delta) * r_arr)
    else:
        out = np.ones_like(r_arr)
    return _scalar_or_array(out, r)


def phi_delta(delta: float, r):
    """Modified distance ``int_0^r s_delta``; ``r^2/2`` in the flat case.

    Uses ``2 sin^2(k r / 2) / k^2`` (resp. sinh) to avoid cancellation in
    ``(1 - c_delta) / delta`` for small ``r``.
    """
    r_arr = _check_radius(delta, r)
    if delta > 0:
        k = math.sqrt(delta)
        out = 2.0 * np.sin(0.5 * k * r_arr) ** 2 / delta
    elif delta < 0:
        k = math.sqrt(-delta)
        out = 2.0 * np.sinh(0.5 * k * r_arr) ** 2 / (-delta)
    else:
        out = 0.5 * r_arr**2
    return _scalar_or_array(out, r)


def s_delta_inverse(delta: float, v):
    """Principal-branch inverse of :func:`s_delta`."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise DomainError("s_delta_inverse needs v >= 0")
    if delta > 0:
        k = math.sqrt(delta)
        if np.any(v_arr * k > 1.0):
            raise DomainError(f"v exceeds max of s_delta, 1/sqrt(delta) = {1 / k}")
        out = np.arcsin(np.minimum(v_arr * k, 1.0)) / k
    elif delta < 0:
        k = math.sqrt(-delta)
        out = np.arcsinh(v_arr * k) / k
    else:
        out = v_arr.copy()
    return _scalar_or_array(out, v)


def cot_delta(delta: float, r):
    """``c_delta(r) / s_delta(r)`` with a series near ``r = 0``."""
    r_arr = _check_radius(delta, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.asarray(c_delta(delta, r_arr) / s_delta(delta, r_arr), dtype=float)
        small = r_arr < SERIES_CUTOFF
        if np.any(small):
            rs = r_arr[small] if r_arr.ndim else r_arr
            series = 1.0 / rs - delta * rs / 3.0 - delta**2 * rs**3 / 45.0
            if r_arr.ndim:
                out[small] = series
            else:
                out = np.asarray(series)
    return _scalar_or_array(out, r)


def cot_delta_regular(delta: float, r):
    """``c_delta/s_delta(r) - 1/r``, which is smooth at 0 (value 0)."""
    r_arr = _check_radius(delta, r)
    out = np.zeros_like(r_arr)
    if delta == 0:
        return _scalar_or_array(out, r)
    d = delta
    small = r_arr < 0.05
    rs = r_arr[small]
    # Laurent tail of sqrt(d) cot(sqrt(d) r); truncation error ~ d^6 r^11
    out[small] = -(
        d * rs / 3.0
        + d**2 * rs**3 / 45.0
        + 2.0 * d**3 * rs**5 / 945.0
        + d**4 * rs**7 / 4725.0
        + 2.0 * d**5 * rs**9 / 93555.0
    )
    big = ~small
    rb = r_arr[big]
    out[big] = c_delta(d, rb) / s_delta(d, rb) - 1.0 / rb
    return _scalar_or_array(out, r)


def max_radius(delta: float) -> float:
    """``pi/sqrt(delta)`` for positive curvature, infinity otherwise."""
    return math.pi / math.sqrt(delta) if delta > 0 else math.inf


@dataclass(frozen=True)
class RadialData:
    r: float
    grad_r: np.ndarray
    hess_coeff: float


@dataclass(frozen=True)
class AmbientModel:
    """Simply connected space form of curvature ``delta`` and dimension ``dim``."""

    delta: float = 0.0
    dim: int = 3

    def __post_init__(self):
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if self.dim < 3:
            raise ValueError("ambient dimension must be >= 3")

    @property
    def chart(self) -> str:
        if self.delta > 0:
            return "sphere"
        if self.delta < 0:
            return "hyperboloid"
        return "euclidean"

    @property
    def embed_dim(self) -> int:
        return self.dim if self.delta == 0 else self.dim + 1

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(abs(self.delta)) if self.delta else math.inf

    @property
    def n(self) -> int:
        """Dimension of hypersurfaces in this ambient."""
        return self.dim - 1

    def origin(self) -> np.ndarray:
        o = np.zeros(self.embed_dim)
        if self.delta != 0:
            o[0] = self.scale
        return o

    # -- metric -------------------------------------------------------------

    def inner(self, u, w):
        """Ambient metric on (stacks of) tangent vectors."""
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        prod = np.sum(u * w, axis=-1)
        if self.delta < 0:
            prod = prod - 2.0 * u[..., 0] * w[..., 0]
        return prod

    def norm(self, u):
        return np.sqrt(np.maximum(self.inner(u, u), 0.0))

    def constraint_violation(self, x):
        """Distance-like measure of how far chart points are off the model."""
        x = np.asarray(x, dtype=float)
        if self.delta == 0:
            return np.zeros(x.shape[:-1])
        s2 = self.scale**2
        if self.delta > 0:
            return np.abs(np.sum(x * x, axis=-1) - s2) / self.scale
        viol = np.abs(self.inner(x, x) + s2) / self.scale
        return np.where(x[..., 0] > 0, viol, np.inf)

    def check_points(self, x, tol=1e-8):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.embed_dim:
            raise ValueError(f"points must have {self.embed_dim} chart coordinates, got {x.shape[-1]}")
        bad = self.constraint_violation(x) > tol * max(1.0, self.scale if self.delta else 1.0)
        if np.any(bad):
            raise ValueError(f"{int(np.sum(bad))} point(s) violate the {self.chart} constraint")
        return x

    def project(self, x):
        """Snap chart points back onto the model (radial rescaling)."""
        x = np.asarray(x, dtype=float)
        if self.delta == 0:
            return x
        if self.delta > 0:
            return x * (self.scale / np.linalg.norm(x, axis=-1, keepdims=True))
        spatial = x[..., 1:]
        x0 = np.sqrt(self.scale**2 + np.sum(spatial**2, axis=-1, keepdims=True))
        return np.concatenate([x0, spatial], axis=-1)

    # -- geodesics ------------------------------------------------------------

    def distance(self, p, q):
        """Geodesic distance, broadcasting over leading axes."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        diff = p - q
        if self.delta == 0:
            return np.linalg.norm(diff, axis=-1)
        s = self.scale
        chord = np.sqrt(np.maximum(self.inner(diff, diff), 0.0))
        if self.delta > 0:
            return 2.0 * s * np.arcsin(np.minimum(chord / (2.0 * s), 1.0))
        return 2.0 * s * np.arcsinh(chord / (2.0 * s))

    def proj_tangent(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.delta == 0:
            return w
        coef = self.inner(x, w) / self.inner(x, x)
        return w - coef[..., None] * x

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.delta == 0:
            return x + v
        s = self.scale
        nv = self.norm(v)[..., None]
        t = nv / s
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.delta > 0:
                sinc = np.where(t > 1e-8, np.sin(t) / np.where(t > 0, t, 1.0), 1.0 - t**2 / 6.0)
                out = np.cos(t) * x + sinc * v
            else:
                sinhc = np.where(t > 1e-8, np.sinh(t) / np.where(t > 0, t, 1.0), 1.0 + t**2 / 6.0)
                out = np.cosh(t) * x + sinhc * v
        return self.project(out)

    def log(self, x, y):
        """Inverse exponential map ``exp_x^{-1}(y)`` as an ambient tangent vector."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.delta == 0:
            return y - x
        d = self.distance(x, y)
        u = self.proj_tangent(x, y - x)
        nu = self.norm(u)
        with np.errstate(invalid="ignore", divide="ignore"):
            fac = np.where(nu > 0, d / np.where(nu > 0, nu, 1.0), 0.0)
        return fac[..., None] * u

    # -- frames ---------------------------------------------------------------

    def transport_from_origin(self, x, w):
        """Parallel transport of ``w`` (tangent at the origin) along the geodesic to ``x``."""
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.delta == 0:
            return np.broadcast_to(w, np.broadcast_shapes(x.shape, w.shape)).copy()
        o = self.origin()
        s = self.scale
        u = self.log(o, x)
        d = self.norm(u)
        safe = np.where(d > 0, d, 1.0)
        uhat = u / safe[..., None]
        uhat = np.where((d > 0)[..., None], uhat, 0.0)
        t = (d / s)[..., None]
        comp = self.inner(uhat, w)[..., None]
        if self.delta > 0:
            return w + comp * ((np.cos(t) - 1.0) * uhat - np.sin(t) * o / s)
        return w + comp * ((np.cosh(t) - 1.0) * uhat + np.sinh(t) * o / s)

    def frame(self, x):
        """Orthonormal tangent frame at ``x``; shape ``x.shape[:-1] + (dim, embed_dim)``."""
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        if self.delta == 0:
            return np.broadcast_to(np.eye(self.dim), lead + (self.dim, self.dim)).copy()
        base = np.zeros((self.dim, self.embed_dim))
        base[:, 1:] = np.eye(self.dim)
        frames = np.empty(lead + (self.dim, self.embed_dim))
        for i in range(self.dim):
            frames[..., i, :] = self.transport_from_origin(x, np.broadcast_to(base[i], lead + (self.embed_dim,)))
        return frames

    def to_frame(self, frames, w):
        """Coordinates of tangent vectors ``w`` in orthonormal ``frames``."""
        w = np.asarray(w, dtype=float)
        return self.inner(frames, w[..., None, :])

    def from_frame(self, frames, c):
        return np.einsum("...i,...ij->...j", np.asarray(c, dtype=float), frames)

    def local_coords(self, x, y, frames=None):
        """Normal coordinates of ``y`` centred at ``x``: frame coordinates of ``log_x(y)``."""
        if frames is None:
            frames = self.frame(x)
        return self.to_frame(frames, self.log(x, y))

    def point_from_local(self, x, c, frames=None):
        if frames is None:
            frames = self.frame(x)
        return self.exp(x, self.from_frame(frames, c))


def ambient_distance(model: AmbientModel, p, q) -> float:
    """Exact geodesic distance between two points of ``model``."""
    p = model.check_points(np.asarray(p, dtype=float))
    q = model.check_points(np.asarray(q, dtype=float))
    return float(model.distance(p, q))


def radial_data(model: AmbientModel, center, x) -> RadialData:
    """Distance, unit radial gradient and Hessian coefficient of ``r = dist(center, .)`` at ``x``."""
    center = model.check_points(np.asarray(center, dtype=float))
    x = model.check_points(np.asarray(x, dtype=float))
    r = float(model.distance(center, x))
    if r < 1e-14:
        raise DomainError("radial data undefined at the center")
    if model.delta > 0 and r >= math.pi / math.sqrt(model.delta) * (1 - 1e-12):
        raise DomainError("antipodal point: distance function not smooth")
    grad = -model.log(x, center) / r
    grad = grad / model.norm(grad)
    return RadialData(r=r, grad_r=grad, hess_coeff=float(cot_delta(model.delta, r)))


def geodesic_sphere_reference(delta: float, n: int, R0: float) -> tuple[float, float]:
    """Mean curvature and first eigenvalue of the geodesic sphere of radius ``R0``.

    ``H = c/s(R0)`` and ``lambda1 = n / s(R0)^2``; they satisfy
    ``n (delta + H^2) = lambda1``.
    """
    s = s_delta(delta, R0)
    c = c_delta(delta, R0)
    if s <= 0:
        raise DomainError("R0 must be positive")
    return c / s, n / s**2
