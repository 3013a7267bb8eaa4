import math

import numpy as np
import pytest
from scipy import integrate

from pinchlab.barycenter import position_field, solve_center
from pinchlab.curvature import h_infty, mean_curvature, shape_operator
from pinchlab.gluedspheres import (FamilyParams, analytic_regional_curvatures, bq_slope, build_mesh, coefficients,
                                   courtois_cutoff, exact_curvatures, lambda1_upper_bound_via_test_function,
                                   neck_B2_discrete, neck_B2_integral, neck_B2_quadrature, profile, profile_jet)
from pinchlab.mesh import total_area, vertex_measures
from pinchlab.spectral import assemble, lambda1

from conftest import GLUED_EPS

A1_EPS01 = 6.666412444648646  # mpmath, 30 digits
B2_EPS01 = 25.00676178262635  # 8 pi sqrt(0.99)


def test_coefficient_values():
    c = coefficients(0.1)
    assert c.a1 == pytest.approx(A1_EPS01, rel=1e-14)
    assert c.a1 == pytest.approx((2 - 0.03) / (0.3 * 0.99**1.5), rel=1e-14)
    assert c.a2 == pytest.approx((1 - 0.02) / (0.04 * 0.99**1.5), rel=1e-14)
    assert c.b1_plus == pytest.approx(1 / (0.3 * c.r0_plus))
    assert c.b2_minus == pytest.approx(-1 / (0.04 * c.r0_minus))
    assert c.r0_plus > 1 > c.r0_minus


@pytest.mark.parametrize("eps", [1e-4, 1e-2, 0.1, 0.25])
def test_r0_quadratic_identity(eps):
    c = coefficients(eps)
    for s, r0 in ((1, c.r0_plus), (-1, c.r0_minus)):
        assert r0**2 - (1 + s * c.a0) * r0 - eps**2 / 12 == pytest.approx(0.0, abs=1e-12)


def test_r0_small_eps_asymptotics():
    # r0_plus - 1 ~ -eps^2 log eps; the ratio tends to 1 like log(2/eps)/log(1/eps)
    ratios = []
    for eps in (1e-2, 1e-4, 1e-6):
        c = coefficients(eps)
        ratios.append((c.r0_plus - 1) / (-eps**2 * math.log(eps)))
        assert (1 - c.r0_minus) / (-eps**2 * math.log(eps)) == pytest.approx(ratios[-1], rel=0.05)
    assert all(a > b > 1 for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1.1


def test_coefficients_domain():
    for bad in (0.0, -0.1, 0.3):
        with pytest.raises(ValueError):
            coefficients(bad)


@pytest.mark.parametrize("eps", GLUED_EPS)
def test_profile_c2_at_region_boundaries(eps):
    c = coefficients(eps)
    for s in (1, -1):
        assert profile(c, s, eps * eps) == 1.0
        for b in (eps, 2 * eps, 3 * eps):
            lo, hi = profile_jet(c, s, b * (1 - 1e-12)), profile_jet(c, s, b * (1 + 1e-12))
            scale = np.maximum(1.0, np.abs(lo))
            np.testing.assert_allclose(lo, hi, atol=1e-8 * scale.max() / eps)
        # top of each sphere sits at height r0 above the centre (3 eps, 0)
        assert profile(c, s, 3 * eps) == pytest.approx(c.r0(s), abs=1e-12)


def test_profile_domain():
    c = coefficients(0.1)
    with pytest.raises(ValueError):
        profile(c, 1, 0.001)
    with pytest.raises(ValueError):
        profile(c, 1, 3 * 0.1 + c.r0_plus + 0.01)


def test_analytic_regional_examples():
    eps = 0.1
    c = coefficients(eps)
    k1, k2 = analytic_regional_curvatures(c, 1, 2 * eps**2)
    assert (k1, k2) == (pytest.approx(1 / (4 * eps**2)), pytest.approx(-1 / (4 * eps**2)))
    for s in (1, -1):
        k1, k2 = analytic_regional_curvatures(c, s, 1.5 * eps)
        assert k1 == pytest.approx(s * 1.25) and k2 == pytest.approx(-s * 0.25)
        assert 0.5 * (k1 + k2) == pytest.approx(s * 0.5)
    k1, k2 = analytic_regional_curvatures(c, 1, 1.0)
    assert 0.5 * (k1 + k2) == pytest.approx(1 - 1.5 * eps)


def test_exact_curvatures_match_leading_order():
    # leading-order values differ from the exact profile curvatures by O(eps) at most
    eps = 0.01
    c = coefficients(eps)
    for r in (3 * eps**2, 1.5 * eps, 0.5):
        exact = np.sort(np.ravel(exact_curvatures(c, 1, r)))
        lead = np.sort(np.asarray(analytic_regional_curvatures(c, 1, r), dtype=float))
        np.testing.assert_allclose(exact, lead, atol=0.05 * max(1.0, np.abs(lead).max()))
    # catenoid: exactly minimal with kappa = eps^2/r^2
    km, kp = exact_curvatures(c, 1, np.array([2 * eps**2, 0.5 * eps]))
    np.testing.assert_allclose(km + kp, 0.0, atol=1e-9)
    np.testing.assert_allclose(np.abs(km), eps**2 / np.array([2 * eps**2, 0.5 * eps]) ** 2, rtol=1e-9)


def test_neck_integral():
    assert neck_B2_integral(0.1) == pytest.approx(B2_EPS01, rel=1e-14)
    assert neck_B2_integral(1e-4) == pytest.approx(8 * math.pi, rel=1e-7)
    assert neck_B2_quadrature(0.2) == pytest.approx(8 * math.pi * math.sqrt(0.96), rel=1e-3)
    with pytest.raises(ValueError):
        neck_B2_integral(0.5)


def test_courtois_cutoff():
    assert courtois_cutoff(0.01, 0.1) == 1.0
    assert courtois_cutoff(0.01, 0.01) == 0.0
    assert courtois_cutoff(0.01, 10**-1.5) == pytest.approx(0.5, abs=1e-12)
    s = np.linspace(0, 1, 2001)
    v = courtois_cutoff(0.01, s)
    assert np.all(np.diff(v) >= 0) and v.min() == 0 and v.max() == 1
    for b in (0.01, 0.1):
        assert courtois_cutoff(0.01, b * (1 - 1e-9)) == pytest.approx(courtois_cutoff(0.01, b * (1 + 1e-9)), abs=1e-8)
    with pytest.raises(ValueError):
        courtois_cutoff(1.0, 0.5)


def test_family_params_validation():
    with pytest.raises(ValueError):
        FamilyParams(0.1, resolution=(8, 128))
    with pytest.raises(ValueError):
        FamilyParams(0.1, l=0)
    with pytest.raises(ValueError):
        FamilyParams(0.1, p=1)
    with pytest.raises(NotImplementedError):
        build_mesh(FamilyParams(0.05, l=2))
    with pytest.raises(NotImplementedError):
        build_mesh(FamilyParams(0.1, p=3))


@pytest.mark.parametrize("eps", GLUED_EPS)
def test_mesh_topology_and_labels(glued_meshes, eps):
    M = glued_meshes[eps]
    assert M.euler_characteristic == 2
    assert set(np.unique(M.sheet)) == {-1, 0, 1}
    np.testing.assert_allclose(M.axis_distance[M.throat], eps**2, rtol=1e-12)
    np.testing.assert_allclose(M.vertices[M.throat, 2], 1.0, atol=1e-12)
    assert M.neck_max_aspect <= 20
    assert 0 < M.min_quality <= 1
    z = M.vertices[:, 2]
    assert z.max() == pytest.approx(M.coeffs.r0_plus, abs=1e-12)
    assert z.min() == pytest.approx(-M.coeffs.r0_plus, abs=1e-12)


def _revolution_area(c):
    """Area of the closed surface from its pieces: catenoid in closed form, gluing bands by
    quadrature of 2 pi r ds, the sphere arc by Pappus and the flat bottom disk."""
    e = c.eps
    T = math.acosh(1 / e)
    total = 0.0
    for s in (1, -1):
        total += math.pi * e**4 * (T + math.sinh(T) * math.cosh(T))

        def band(r):
            return 2 * math.pi * r * math.sqrt(1 + float(profile_jet(c, s, r)[1]) ** 2)

        total += integrate.quad(band, e, 2 * e, epsrel=1e-12)[0]
        total += 2 * integrate.quad(band, 2 * e, 3 * e, epsrel=1e-12)[0]
        r0 = c.r0(s)
        total += 2 * math.pi * r0 * (3 * math.pi * e + 2 * r0)
        total += math.pi * (2 * e) ** 2
    return total


@pytest.mark.parametrize("eps", GLUED_EPS)
def test_area_matches_revolution_oracle(glued_meshes, eps):
    M = glued_meshes[eps]
    exact = _revolution_area(M.coeffs)
    a = total_area(M)
    assert a < exact
    assert a == pytest.approx(exact, rel=1e-3)


@pytest.mark.xfail(strict=True, reason="the spheres are centred 3 eps off the axis, so each sheet has area "
                                       "4 pi r0^2 + 6 pi^2 eps r0 and the total exceeds 8 pi by O(eps)")
def test_area_two_unit_spheres(glued_meshes):
    assert total_area(glued_meshes[0.1]) == pytest.approx(8 * math.pi, rel=0.05)


@pytest.mark.parametrize("eps", GLUED_EPS)
def test_discrete_curvature_matches_profile(glued_meshes, eps):
    M = glued_meshes[eps]
    c = M.coeffs
    field = shape_operator(M)
    r, z = M.axis_distance, M.vertices[:, 2]
    for s in (1, -1):
        idx = np.flatnonzero((M.sheet == s) & (z > 0.5))
        for target in (3 * eps**2, 0.5 * eps, 1.5 * eps, 2.5 * eps, 3 * eps + 0.5 * c.r0(s)):
            j = idx[np.argmin(np.abs(r[idx] - target))]
            exact = np.sort(np.ravel(exact_curvatures(c, s, r[j])))[::-1]
            scale = max(1.0, np.abs(exact).max())
            np.testing.assert_allclose(field.principal[j], exact, atol=0.05 * scale)


def test_neck_discrete_integral(glued_meshes):
    for eps, M in glued_meshes.items():
        assert neck_B2_discrete(M) == pytest.approx(neck_B2_integral(eps), rel=0.05)


def test_mean_curvature_and_position_trends(glued_meshes):
    hs, xdev = [], []
    for eps in GLUED_EPS:
        M = glued_meshes[eps]
        h = h_infty(mean_curvature(M))
        assert abs(h - 1) <= 10 * eps
        hs.append(abs(h - 1))
        p0 = solve_center(M).p0
        assert math.hypot(p0[0], p0[1]) < 1e-8
        xdev.append(float(np.max(np.abs(position_field(M, p0).norm_X - 1))))
    assert hs[0] > hs[1] > hs[2]
    assert xdev[0] > xdev[1] > xdev[2]


def test_test_function_quotient(glued_meshes):
    qs = []
    for eps in GLUED_EPS:
        M = glued_meshes[eps]
        op = assemble(M)
        q = lambda1_upper_bound_via_test_function(M, op=op)
        assert q >= lambda1(op).lambda1 - 1e-10
        qs.append(q)
    assert qs[0] > qs[1] > qs[2]


def test_quotient_requires_labels(unit_sphere4):
    with pytest.raises(ValueError):
        lambda1_upper_bound_via_test_function(unit_sphere4, 0.1)


def test_bq_slope():
    eps = np.array([0.2, 0.1, 0.05])
    assert bq_slope(eps, 3 * eps**-1.0) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        bq_slope([0.1], [1.0])


def test_neck_B1_vanishes(glued_meshes):
    # on the catenoid |B| = sqrt(2) eps^2/r^2, so both sheets give 4 sqrt(2) pi eps^2 arccosh(1/eps)
    vals = []
    for eps in GLUED_EPS:
        M = glued_meshes[eps]
        f = shape_operator(M)
        m = vertex_measures(M).dual_area
        r = M.axis_distance
        w = np.where(r < eps * (1 - 1e-9), 1.0, np.where(r <= eps * (1 + 1e-9), 0.5, 0.0))
        b1 = float(np.sum(w * m * f.B_norm))
        exact = 4 * math.sqrt(2) * math.pi * eps**2 * math.acosh(1 / eps)
        assert b1 == pytest.approx(exact, rel=0.01)
        vals.append(b1)
    assert vals[0] > vals[1] > vals[2]
