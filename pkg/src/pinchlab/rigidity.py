"""Riccati comparison along a radial geodesic and the rigidity certificate.

Along a unit-speed geodesic with radial curvature ``k(t)`` the Jacobi field
satisfies ``J'' = -k J`` and ``rho = J'/J`` solves ``rho' = -k - rho^2``.
With ``phi = c_delta/s_delta`` the model solution, we integrate the smooth
deviation ``g = rho - phi`` and ``l = log(J / s_delta)``:

    g' = (delta - k) - g (2 phi + g),     l' = g,

which removes the ``1/t`` singularity from the unknowns.  The auxiliary
``F(t) = g(t) exp(int_{d0}^t (rho + phi))`` has ``F' = (delta - k) exp(...)``
and is nondecreasing whenever ``k <= delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .mesh import SurfaceMesh, extrinsic_ball_area
from .spaceform import DomainError, cot_delta, max_radius, s_delta


class FocalPointError(ArithmeticError):
    """The Jacobi field vanishes (rho blows up to -inf) before the end of the interval."""

    def __init__(self, t: float):
        super().__init__(f"focal failure: Jacobi field vanishes near t = {t:.6g}")
        self.t = t


@dataclass(frozen=True)
class RadialCurvatureProfile:
    """Radial curvature ``k(t)`` on ``[0, R]`` with ``mu <= k <= delta``."""

    mu: float
    delta: float
    k: Callable
    R: float

    def __post_init__(self):
        if self.mu > self.delta:
            raise ValueError("mu must not exceed delta")
        if not self.R > 0:
            raise ValueError("R must be positive")
        t = np.linspace(0.0, self.R, 257)
        kv = self.sample(t)
        tol = 1e-12 * max(1.0, abs(self.mu), abs(self.delta))
        if np.any(kv < self.mu - tol) or np.any(kv > self.delta + tol):
            raise ValueError("profile leaves [mu, delta]")

    def sample(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.k(t), dtype=float), t.shape).astype(float)

    # built-in families
    @classmethod
    def constant(cls, value, mu, delta, R):
        return cls(mu, delta, lambda t: np.full(np.shape(t), float(value)), R)

    @classmethod
    def linear(cls, mu, delta, R, reverse=False):
        """Linear interpolation from ``mu`` at 0 to ``delta`` at ``R`` (or the reverse)."""
        if reverse:
            return cls(mu, delta, lambda t: delta + (mu - delta) * np.asarray(t) / R, R)
        return cls(mu, delta, lambda t: mu + (delta - mu) * np.asarray(t) / R, R)

    @classmethod
    def bump(cls, mu, delta, R, center, width, amplitude=1.0):
        """``delta - amplitude (delta - mu) b(t)`` with a smooth compact bump ``b`` of max 1."""
        return cls(mu, delta, lambda t: delta - amplitude * (delta - mu) * _bump(t, center, width), R)


def _bump(t, center, width):
    x = (np.asarray(t, dtype=float) - center) / width
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    return out


def _ramp(t, start, width):
    x = np.clip((np.asarray(t, dtype=float) - start) / width, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


@dataclass(frozen=True)
class RiccatiSolution:
    grid: np.ndarray
    rho: np.ndarray
    J: np.ndarray
    F_aux: np.ndarray
    d0: float
    g: np.ndarray
    log_ratio: np.ndarray
    mu: float
    delta: float

    @property
    def R(self) -> float:
        return float(self.grid[-1])

    @property
    def ratio(self) -> np.ndarray:
        """``J / s_delta`` on the grid."""
        return np.exp(self.log_ratio)

    def sandwich_ok(self, tol: float = 1e-6) -> bool:
        phi_mu = cot_delta(self.mu, self.grid)
        return bool(np.all(self.g >= -tol) and np.all(self.rho <= phi_mu + tol))

    def columns(self) -> dict:
        return {"t": self.grid, "rho": self.rho, "J": self.J, "F_aux": self.F_aux,
                "s_delta": s_delta(self.delta, self.grid), "ratio": self.ratio}


def _series_start(delta, k0, k1, d0):
    """``g(d0)`` and ``l(d0)`` from the expansion of ``rho`` for ``k = k0 + k1 t``."""
    g = cot_delta(k0, d0) - cot_delta(delta, d0) - k1 * d0 * d0 / 4.0
    l = math.log(s_delta(k0, d0) / s_delta(delta, d0)) - k1 * d0**3 / 12.0
    return g, l


def _integrate_rho_direct(profile, t0, rho0, logJ0, R, dt):
    """Plain RK4 on ``rho' = -k - rho^2`` to locate a focal point."""
    n = max(1, int(math.ceil((R - t0) / dt)))
    h = (R - t0) / n
    t, rho = t0, rho0
    for _ in range(n):
        k1 = -profile.sample(t) - rho * rho
        k2 = -profile.sample(t + h / 2) - (rho + h / 2 * k1) ** 2
        k3 = -profile.sample(t + h / 2) - (rho + h / 2 * k2) ** 2
        k4 = -profile.sample(t + h) - (rho + h * k3) ** 2
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        if not np.isfinite(rho) or rho < -1.0 / h:
            raise FocalPointError(t)
    return rho


def integrate_riccati(profile: RadialCurvatureProfile, dt: float) -> RiccatiSolution:
    """Fourth-order Runge-Kutta integration of the Riccati deviation from ``d0``.

    ``d0 = max(10 dt, 1e-4 R)``; the start values follow from the series of
    ``rho`` for locally linear ``k``, and are exact for constant ``k``.

    Raises
    ------
    FocalPointError
        If ``rho`` blows up before ``R`` (only possible when ``delta > 0``).
    DomainError
        If ``R >= pi/sqrt(delta)`` but no focal point is found: the model
        comparison function is undefined there.
    """
    R = profile.R
    if not 0 < dt <= R / 1000 * (1 + 1e-12):
        raise ValueError("dt must lie in (0, R/1000]")
    d, mu = profile.delta, profile.mu
    d0 = max(10 * dt, 1e-4 * R)
    k0 = float(profile.sample(0.0))
    k1 = (float(profile.sample(d0)) - k0) / d0
    tmax = max_radius(d)
    if R >= tmax * (1 - 1e-9):
        # switch to the singular form well before the model focal time
        t_sw = 0.5 * tmax
        rho0 = cot_delta(k0, d0) - k1 * d0 * d0 / 4.0 if d0 < t_sw else None
        _integrate_rho_direct(profile, d0, rho0, 0.0, R, dt)
        raise DomainError(f"R = {R} reaches pi/sqrt(delta) = {tmax}; comparison undefined")
    N = max(1, int(math.ceil((R - d0) / dt)))
    t = d0 + (R - d0) * np.arange(N + 1) / N
    h = (R - d0) / N
    tm = t[:-1] + h / 2
    kn, km = profile.sample(t), profile.sample(tm)
    pn, pm = cot_delta(d, t), cot_delta(d, tm)
    dk_n, dk_m = (d - kn).tolist(), (d - km).tolist()
    pn2, pm2 = (2 * pn).tolist(), (2 * pm).tolist()
    g0, l0 = _series_start(d, k0, k1, d0)
    g = np.empty(N + 1)
    lr = np.empty(N + 1)
    g[0], lr[0] = g0, l0
    gi, li = g0, l0
    for i in range(N):
        a1 = dk_n[i] - gi * (pn2[i] + gi)
        y = gi + 0.5 * h * a1
        a2 = dk_m[i] - y * (pm2[i] + y)
        y = gi + 0.5 * h * a2
        a3 = dk_m[i] - y * (pm2[i] + y)
        y = gi + h * a3
        a4 = dk_n[i + 1] - y * (pn2[i + 1] + y)
        li += h / 6.0 * (gi + 2.0 * (gi + 0.5 * h * a1) + 2.0 * (gi + 0.5 * h * a2) + (gi + h * a3))
        gi += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        if not math.isfinite(gi):
            raise FocalPointError(float(t[i + 1]))
        g[i + 1], lr[i + 1] = gi, li
    sd = s_delta(d, t)
    J = sd * np.exp(lr)
    if np.any(J <= 0):
        raise FocalPointError(float(t[np.argmax(J <= 0)]))
    rho = pn + g
    F = g * np.exp(lr - lr[0]) * (sd / sd[0]) ** 2
    return RiccatiSolution(t, rho, J, F, d0, g, lr, mu, d)


@dataclass(frozen=True)
class Certificate:
    ok: bool
    max_ratio: float
    F_monotone: bool
    bound: float
    log_bound: float
    C_explicit: float
    d0: float
    boundary_defect: float
    min_ratio: float


def rigidity_certificate(solution: RiccatiSolution, eps: float, n: int = 2) -> Certificate:
    """Check ``J/s_delta <= exp(C sqrt(eps))`` with ``C`` built from the comparison chain.

    With ``d0 = sqrt(6/(delta-mu)) eps^{1/4}``:

    * ``F(R) <= Fmax = n eps s_mu(R) s_delta(R) / (s_mu(d0) s_delta(d0))``;
    * ``g(t) <= Fmax s_delta(d0)^2 / s_delta(t)^2`` on ``[d0, R]``;
    * ``log(J/s_delta)(t) <= log(s_mu/s_delta)(d0) + Fmax s_delta(d0)^2 (phi(d0) - phi(t))``.

    Raises
    ------
    ValueError
        If the boundary hypothesis ``rho(R) - phi(R) <= n eps`` fails.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    mu, d = solution.mu, solution.delta
    t = solution.grid
    R = solution.R
    defect = float(solution.g[-1])
    if defect > n * eps + 1e-12 * max(1.0, abs(solution.rho[-1])):
        raise ValueError(f"boundary hypothesis fails: rho(R) - phi(R) = {defect:.3e} > n eps = {n * eps:.3e}")
    if d > mu and eps > 0:
        d0 = math.sqrt(6.0 / (d - mu)) * eps**0.25
    else:
        d0 = float(t[0])
    d0 = min(max(d0, float(t[0])), R)
    sm0, sd0 = s_delta(mu, d0), s_delta(d, d0)
    Fmax = n * eps * s_delta(mu, R) * s_delta(d, R) / (sm0 * sd0)
    log_bound = math.log(sm0 / sd0) + Fmax * sd0**2 * (cot_delta(d, d0) - cot_delta(d, R))
    ratio = solution.ratio
    max_ratio = float(ratio.max())
    min_ratio = float(ratio.min())
    F = solution.F_aux
    scale = max(1.0, float(np.abs(F).max()))
    monotone = bool(np.all(np.diff(F) >= -1e-9 * scale))
    bound = math.exp(log_bound)
    ok = bool(min_ratio >= 1 - 1e-9 and max_ratio <= bound * (1 + 1e-8))
    C = log_bound / math.sqrt(eps) if eps > 0 else math.inf
    return Certificate(ok, max_ratio, monotone, bound, log_bound, C, d0, defect, min_ratio)


def boundary_defect(profile: RadialCurvatureProfile, dt: float, n: int = 2) -> float:
    """``(rho(R) - phi(R)) / n``, the eps for which the certificate hypothesis is sharp."""
    return float(integrate_riccati(profile, dt).g[-1]) / n


def random_admissible_profile(seed: int, mu: float, delta: float, R: float, amplitude: float = 1.0):
    """Seeded bump or ramp dip of ``k`` below ``delta``."""
    rng = np.random.default_rng(seed)
    if rng.random() < 0.5:
        c = rng.uniform(0.2, 0.8) * R
        w = rng.uniform(0.2, 0.5) * R
        return RadialCurvatureProfile(mu, delta, lambda t: delta - amplitude * (delta - mu) * _bump(t, c, w), R)
    s = rng.uniform(0.0, 0.6) * R
    w = rng.uniform(0.1, 0.4) * R
    return RadialCurvatureProfile(mu, delta, lambda t: delta - amplitude * (delta - mu) * _ramp(t, s, w), R)


def profile_with_defect(seed: int, eps: float, mu: float, delta: float, R: float, dt: float, n: int = 2):
    """Random admissible profile whose amplitude is tuned so the boundary defect equals ``eps``."""
    def gap(a):
        return boundary_defect(random_admissible_profile(seed, mu, delta, R, a), dt, n) - eps

    if gap(1.0) < 0:
        raise ValueError("target defect not reachable for this profile")
    a = brentq(gap, 0.0, 1.0, xtol=1e-14, rtol=1e-12)
    return random_admissible_profile(seed, mu, delta, R, a)


@dataclass(frozen=True)
class MonotonicityResult:
    ok: bool
    worst_margin: float
    s: np.ndarray
    F: np.ndarray


def volume_monotonicity_check(mesh: SurfaceMesh, x0, Lambda: float, r0: float, samples: int = 32,
                              slack: float = 0.03) -> MonotonicityResult:
    """Weighted monotonicity of ``F(s) = |B(x0, s) cap M| / s_delta(s)^n``.

    Every sampled pair ``s < s'`` must satisfy
    ``F(s) <= F(s') exp((n Lambda + sqrt(max(0, -delta))) (s' - s))`` up to
    ``1 + slack``.  ``worst_margin`` is the largest ``lhs/rhs`` ratio.
    """
    model = mesh.ambient
    d, n = model.delta, model.n
    if samples < 2 or not r0 > 0:
        raise ValueError("need r0 > 0 and at least two samples")
    if d > 0 and r0 > 0.5 * math.pi / math.sqrt(d):
        raise DomainError("r0 must not exceed pi/(2 sqrt(delta))")
    x0 = np.asarray(x0, dtype=float)
    dist = model.distance(mesh.vertices, x0)
    s = r0 * np.arange(1, samples + 1) / samples
    F = np.array([extrinsic_ball_area(mesh, x0, si, dist) for si in s]) / s_delta(d, s) ** n
    rate = n * Lambda + math.sqrt(max(0.0, -d))
    i, j = np.triu_indices(samples, 1)
    rhs = F[j] * np.exp(rate * (s[j] - s[i]))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(F[i] > 0, F[i] / rhs, 0.0)
    worst = float(ratio.max()) if ratio.size else 0.0
    return MonotonicityResult(bool(worst <= 1 + slack), worst, s, F)
