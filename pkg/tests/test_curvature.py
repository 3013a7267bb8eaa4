import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinchlab.curvature import h_infty, mean_curvature, norm_B_q, shape_operator
from pinchlab.mesh import SurfaceMesh, generate_icosphere, generate_revolution, vertex_measures
from pinchlab.spaceform import AmbientModel, cot_delta

from conftest import SPHERE_RADII


@pytest.mark.parametrize("d", [-1.0, 0.0, 1.0])
def test_sphere_curvatures(geodesic_spheres, d):
    m = geodesic_spheres[d]
    expected = float(cot_delta(d, SPHERE_RADII[d]))
    H = mean_curvature(m)
    np.testing.assert_allclose(H, expected, rtol=1e-2)
    field = shape_operator(m)
    np.testing.assert_allclose(field.principal, expected, rtol=5e-3)
    assert h_infty(field) == pytest.approx(expected, rel=5e-3)
    mu = vertex_measures(m)
    for q in (1, 2, 4, np.inf):
        assert norm_B_q(field, mu, q) == pytest.approx(math.sqrt(2) * expected, rel=5e-3)


def test_flipped_orientation_negates(unit_sphere4):
    assert mean_curvature(unit_sphere4.flipped()).max() < 0
    assert shape_operator(unit_sphere4.flipped()).H.max() < 0


def _cylinder_errors(n_theta):
    mer = np.stack([np.full(n_theta // 2 + 1, 0.5), np.linspace(0, 4, n_theta // 2 + 1)], 1)
    m = generate_revolution(AmbientModel(0.0), mer, n_theta=n_theta, caps=False)
    z = m.vertices[:, 2]
    inner = (z > 1.0) & (z < 3.0)
    k = shape_operator(m).principal[inner]
    return np.abs(k[:, 0] - 2.0).max(), np.abs(k[:, 1]).max(), np.abs(mean_curvature(m)[inner] - 1.0).max()


def test_cylinder_principal_curvatures():
    e64, e128 = _cylinder_errors(64), _cylinder_errors(128)
    assert e128[0] < 5e-3 and e128[1] < 1e-4 and e128[2] < 5e-3
    # second order in the mesh size
    assert e64[0] / e128[0] == pytest.approx(4.0, rel=0.1)


def test_spheroid_pole_and_equator(euclid):
    a, c = 1.0, 1.6
    t = np.linspace(-math.pi / 2, math.pi / 2, 161)
    mer = np.stack([a * np.cos(t), c * np.sin(t)], 1)
    mer[0, 0] = mer[-1, 0] = 0.0
    m = generate_revolution(euclid, mer, n_theta=160)
    k = shape_operator(m).principal
    z = m.vertices[:, 2]
    pole = np.argmax(z)
    np.testing.assert_allclose(k[pole], c / a**2, rtol=1e-2)
    eq = np.abs(z) < 1e-12
    np.testing.assert_allclose(k[eq, 0], 1 / a, rtol=1e-2)
    np.testing.assert_allclose(k[eq, 1], a / c**2, rtol=1e-2)


def test_norm_inequalities(perturbed4):
    field = shape_operator(perturbed4)
    mu = vertex_measures(perturbed4)
    # n H^2 <= |B|^2 pointwise, Jensen along q
    assert np.all(2 * field.H**2 <= field.B_norm**2 * (1 + 1e-12))
    norms = [norm_B_q(field, mu, q) for q in (0.5, 1, 2, 4, 8, np.inf)]
    assert all(x <= y * (1 + 1e-12) for x, y in zip(norms, norms[1:]))
    with pytest.raises(ValueError):
        norm_B_q(field, mu, 0)
    with pytest.raises(ValueError):
        h_infty(np.array([]))


@settings(max_examples=10, deadline=None)
@given(st.floats(0.25, 4.0))
def test_curvature_scales_inversely(c):
    base = generate_icosphere(AmbientModel(0.0), subdivisions=3)
    big = SurfaceMesh(c * base.vertices, base.faces)
    np.testing.assert_allclose(shape_operator(big).principal, shape_operator(base).principal / c, rtol=1e-8)
    np.testing.assert_allclose(mean_curvature(big), mean_curvature(base) / c, rtol=1e-10)


def test_field_reports_surface_dimension():
    m = generate_icosphere(AmbientModel(0.0), subdivisions=1)
    assert shape_operator(m).n == 2
