import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinchlab.mesh import SurfaceMesh, generate_icosphere, perturb_radially
from pinchlab.spaceform import AmbientModel
from pinchlab.spectral import (ConvergenceError, assemble, dense_spectrum_oracle, edge_weights, lambda1,
                               rayleigh_quotient)

TETRA_V = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
TETRA_F = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]])


def test_tetrahedron_exact():
    # all weights 1/sqrt(3), dual areas 2 sqrt(3): spectrum {0, 2/3, 2/3, 2/3}
    op = assemble(SurfaceMesh(TETRA_V, TETRA_F))
    _, w = edge_weights(SurfaceMesh(TETRA_V, TETRA_F))
    np.testing.assert_allclose(w, 1 / math.sqrt(3), rtol=1e-14)
    np.testing.assert_allclose(op.mass, 2 * math.sqrt(3), rtol=1e-14)
    np.testing.assert_allclose(dense_spectrum_oracle(op), [0, 2 / 3, 2 / 3, 2 / 3], atol=1e-13)
    assert lambda1(op, tol=1e-12).lambda1 == pytest.approx(2 / 3, rel=1e-12)


def test_stiffness_structure(perturbed4):
    op = assemble(perturbed4)
    S = op.stiffness
    assert abs(S - S.T).max() < 1e-14
    np.testing.assert_allclose(S @ np.ones(op.size), 0.0, atol=1e-12)
    assert op.clamped_edges == 0
    assert np.all(op.mass > 0)


def test_unit_sphere_lambda1(unit_sphere5):
    res = lambda1(assemble(unit_sphere5))
    assert res.lambda1 == pytest.approx(2.0, rel=2e-3)
    assert res.residual <= 1e-10


def test_dense_oracle_agreement(euclid):
    m = perturb_radially(generate_icosphere(euclid, subdivisions=3), 0.15, seed=2)
    op = assemble(m)
    ev = dense_spectrum_oracle(op)
    assert abs(ev[0]) < 1e-10
    assert lambda1(op, tol=1e-11).lambda1 == pytest.approx(ev[1], rel=1e-9)


def test_eigenvector_normalised_and_mean_free(unit_sphere4):
    op = assemble(unit_sphere4)
    res = lambda1(op)
    v = res.eigenvector
    assert v @ (op.mass * v) == pytest.approx(1.0)
    assert abs(op.mass @ v) < 1e-10
    assert rayleigh_quotient(op, v).value == pytest.approx(res.lambda1, rel=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 4.0))
def test_lambda1_scales_inverse_square(c):
    base = generate_icosphere(AmbientModel(0.0), subdivisions=2)
    l0 = lambda1(assemble(base)).lambda1
    lc = lambda1(assemble(SurfaceMesh(c * base.vertices, base.faces))).lambda1
    assert lc == pytest.approx(l0 / c**2, rel=1e-8)


def test_seed_independent(perturbed4):
    op = assemble(perturbed4)
    a, b = lambda1(op, seed=0).lambda1, lambda1(op, seed=99).lambda1
    assert a == pytest.approx(b, rel=1e-9)


def test_rayleigh_quotient(unit_sphere4):
    op = assemble(unit_sphere4)
    z = unit_sphere4.vertices[:, 2]
    assert rayleigh_quotient(op, z).value == pytest.approx(2.0, rel=5e-3)
    # shifting by a constant changes nothing
    assert rayleigh_quotient(op, z + 3.0).value == pytest.approx(rayleigh_quotient(op, z).value, rel=1e-12)
    q = rayleigh_quotient(op, np.full(op.size, 2.0))
    assert q.degenerate and q.value == 0.0
    with pytest.raises(ValueError):
        rayleigh_quotient(op, np.zeros(op.size))
    with pytest.raises(ValueError):
        rayleigh_quotient(op, z[:-1])


def test_quotient_bounds_lambda1(perturbed4, rng):
    op = assemble(perturbed4)
    l1 = lambda1(op).lambda1
    for _ in range(5):
        assert rayleigh_quotient(op, rng.normal(size=op.size)).value >= l1 * (1 - 1e-10)


def test_invalid_tolerance_and_budget(unit_sphere4):
    op = assemble(unit_sphere4)
    for tol in (0.0, 1e-13, 1e-3):
        with pytest.raises(ValueError):
            lambda1(op, tol=tol)
    with pytest.raises(ConvergenceError):
        lambda1(op, tol=1e-12, maxiter=1, block=1)


def test_obtuse_mesh_clamps(euclid):
    # stretching a sphere into a thin needle creates obtuse pairs with negative weights
    base = generate_icosphere(euclid, subdivisions=2)
    m = SurfaceMesh(base.vertices * [1, 1, 12], base.faces)
    _, w = edge_weights(m)
    op = assemble(m)
    assert op.clamped_edges == int(np.sum(w < -1e-12 * np.abs(w).max()))
    assert op.clamped_edges > 0
    assert op.stiffness.diagonal().min() >= 0
