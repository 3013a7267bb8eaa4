import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinchlab.spaceform import (AmbientModel, DomainError, ambient_distance, c_delta, cot_delta,
                                geodesic_sphere_reference, phi_delta, radial_data, s_delta, s_delta_inverse)

# frozen from a 30-digit mpmath evaluation
SINH1 = 1.1752011936438014
COSH2 = 3.7621956910836314
COSH1_M1 = 0.5430806348152437
COTH07 = 1.6546216358026294
COTH1 = 1.3130352854993313
LAM_H1 = 1.4481233219326209  # 2 / sinh(1)^2

deltas = st.sampled_from([-4.0, -1.0, -0.25, 0.0, 0.3, 1.0, 2.5])


@pytest.mark.parametrize("d, r, expected", [(0.0, 1.7, 1.7), (1.0, math.pi / 2, 1.0), (-1.0, 1.0, SINH1)])
def test_s_delta_values(d, r, expected):
    assert s_delta(d, r) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("d, r, expected", [(0.0, 5.3, 1.0), (1.0, math.pi / 3, 0.5), (-1.0, 2.0, COSH2)])
def test_c_delta_values(d, r, expected):
    assert c_delta(d, r) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("d, r, expected", [(0.0, 2.0, 2.0), (1.0, math.pi / 2, 1.0), (-1.0, 1.0, COSH1_M1)])
def test_phi_delta_values(d, r, expected):
    assert phi_delta(d, r) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("d, v, expected", [(0.0, 3.0, 3.0), (1.0, 1.0, math.pi / 2), (-1.0, SINH1, 1.0)])
def test_s_delta_inverse_values(d, v, expected):
    assert s_delta_inverse(d, v) == pytest.approx(expected, rel=1e-10)


def test_domain_errors():
    with pytest.raises(DomainError):
        s_delta(1.0, math.pi)
    with pytest.raises(DomainError):
        s_delta_inverse(4.0, 0.6)


@settings(max_examples=60, deadline=None)
@given(deltas, st.floats(0.0, 1.0))
def test_pythagorean_identity(d, frac):
    rmax = math.pi / math.sqrt(d) if d > 0 else 5.0
    r = frac * rmax * 0.999
    c2 = c_delta(d, r) ** 2
    # cancellation grows with cosh^2 on the hyperbolic side
    assert c2 + d * s_delta(d, r) ** 2 == pytest.approx(1.0, abs=1e-14 * max(1.0, c2))


@settings(max_examples=60, deadline=None)
@given(deltas, st.floats(0.05, 0.95))
def test_derivative_chain(d, frac):
    rmax = math.pi / math.sqrt(d) if d > 0 else 3.0
    r, h = frac * rmax, 1e-5
    ds = (phi_delta(d, r + h) - phi_delta(d, r - h)) / (2 * h)
    dc = (s_delta(d, r + h) - s_delta(d, r - h)) / (2 * h)
    assert ds == pytest.approx(s_delta(d, r), rel=1e-6)
    assert dc == pytest.approx(c_delta(d, r), rel=1e-6, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(deltas, st.floats(0.0, 0.999))
def test_inverse_roundtrip_principal_branch(d, frac):
    rmax = 0.5 * math.pi / math.sqrt(d) if d > 0 else 4.0
    r = frac * rmax
    assert s_delta_inverse(d, s_delta(d, r)) == pytest.approx(r, abs=1e-10)


def test_cot_series_matches_closed_form_across_cutoff():
    for d in (-1.0, 0.0, 1.0):
        r = np.array([0.99e-4, 1.01e-4])
        exact = np.array([c_delta(d, x) / s_delta(d, x) for x in r])
        np.testing.assert_allclose(cot_delta(d, r), exact, rtol=1e-12)


def test_distance_examples():
    e = AmbientModel(0.0)
    assert ambient_distance(e, [0, 0, 0], [3, 4, 0]) == pytest.approx(5.0)
    s = AmbientModel(1.0)
    assert ambient_distance(s, [1, 0, 0, 0], [0, 1, 0, 0]) == pytest.approx(math.pi / 2)
    h = AmbientModel(-1.0)
    q = np.array([math.cosh(1.0), math.sinh(1.0), 0, 0])
    assert h.inner(h.origin(), q) == pytest.approx(-math.cosh(1.0))
    assert ambient_distance(h, h.origin(), q) == pytest.approx(1.0, abs=1e-12)


def test_off_model_points_rejected():
    with pytest.raises(ValueError):
        ambient_distance(AmbientModel(1.0), [1.1, 0, 0, 0], [1, 0, 0, 0])


@pytest.mark.parametrize("d", [-1.0, 0.0, 1.0])
def test_triangle_inequality_and_symmetry(d, rng):
    m = AmbientModel(d)
    o = m.origin()
    fr = np.broadcast_to(m.frame(o), (30, 3, m.embed_dim))
    pts = m.point_from_local(np.broadcast_to(o, (30, m.embed_dim)), rng.normal(size=(30, 3)) * 0.4, frames=fr)
    a, b, c = pts[:10], pts[10:20], pts[20:]
    dab, dbc, dac = m.distance(a, b), m.distance(b, c), m.distance(a, c)
    assert np.all(dac <= dab + dbc + 1e-9)
    np.testing.assert_allclose(dab, m.distance(b, a), atol=1e-14)


@pytest.mark.parametrize("d", [-1.0, 0.0, 1.0])
def test_exp_log_inverse(d, rng):
    m = AmbientModel(d)
    o = m.origin()
    v = m.from_frame(m.frame(o), rng.normal(size=3) * 0.5)
    y = m.exp(o, v)
    assert m.constraint_violation(y) < 1e-12
    np.testing.assert_allclose(m.log(o, y), v, atol=1e-12)
    assert m.distance(o, y) == pytest.approx(float(m.norm(v)), rel=1e-12)


def test_radial_data_examples():
    e = AmbientModel(0.0)
    rd = radial_data(e, [0, 0, 0], [2, 0, 0])
    assert rd.r == pytest.approx(2.0)
    np.testing.assert_allclose(rd.grad_r, [1, 0, 0], atol=1e-15)
    assert rd.hess_coeff == pytest.approx(0.5)
    s = AmbientModel(1.0)
    x = s.exp(s.origin(), np.array([0, math.pi / 4, 0, 0]))
    rd = radial_data(s, s.origin(), x)
    assert rd.hess_coeff == pytest.approx(1.0, abs=1e-12)
    assert float(s.norm(rd.grad_r)) == pytest.approx(1.0, abs=1e-10)
    h = AmbientModel(-1.0)
    x = h.exp(h.origin(), np.array([0, 0, 0.7, 0]))
    assert radial_data(h, h.origin(), x).hess_coeff == pytest.approx(COTH07, rel=1e-12)
    with pytest.raises(DomainError):
        radial_data(e, [1, 1, 1], [1, 1, 1])


@pytest.mark.parametrize("d, R, H, lam", [(0.0, 1.0, 1.0, 2.0), (0.0, 0.5, 2.0, 8.0), (-1.0, 1.0, COTH1, LAM_H1)])
def test_geodesic_sphere_reference(d, R, H, lam):
    h, l1 = geodesic_sphere_reference(d, 2, R)
    assert h == pytest.approx(H, rel=1e-13)
    assert l1 == pytest.approx(lam, rel=1e-13)
    assert 2 * (d + h * h) == pytest.approx(l1, rel=1e-12)
