import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullitylab import jets as J
from nullitylab.immersion import (
    AmbientSpace,
    Chart,
    DomainError,
    catenoid_chart,
    christoffel,
    circular_cylinder_chart,
    evaluate_tower,
    extrinsic_sectional,
    fundamental_forms,
    geometry_at,
    graph_chart,
    membership_residual,
    pivoted_gram_schmidt,
    plane_chart,
    polar_plane_chart,
    relative_nullity,
    sectional_curvature,
    unit_sphere_chart,
)

angles = st.floats(-3.0, 3.0)
small = st.floats(-0.9, 0.9)


@settings(max_examples=30, deadline=None)
@given(angles, st.floats(-4, 4))
def test_cylinder_has_nullity_one_and_half_mean_curvature(t, s):
    ff = geometry_at(circular_cylinder_chart(), [t, s])
    nd = relative_nullity(ff)
    assert nd.index == 1
    assert abs(ff.mean_curvature - 0.5) < 1e-12
    # the ruling direction spans the nullity
    assert abs(abs(nd.basis[0][2]) - 1.0) < 1e-12


def test_plane_and_sphere_nullity():
    ff = geometry_at(plane_chart(), [0.3, -0.2])
    assert relative_nullity(ff).index == 2
    assert ff.mean_curvature == 0.0
    ff = geometry_at(unit_sphere_chart(), [0.4, 1.1])
    assert relative_nullity(ff).index == 0
    assert abs(ff.mean_curvature - 1.0) < 1e-12


@settings(max_examples=25, deadline=None)
@given(small, small)
def test_graph_mean_curvature_matches_closed_form(u, v):
    a, b = 0.7, -0.4
    chart = graph_chart(lambda x, y: a * x * x + b * x * y * y + J.sin(y))
    ff = geometry_at(chart, [u, v])
    # closed form for z = h(u, v)
    hu, hv = 2 * a * u + b * v * v, 2 * b * u * v + math.cos(v)
    huu, huv, hvv = 2 * a, 2 * b * v, 2 * b * u - math.sin(v)
    w = 1 + hu * hu + hv * hv
    H = abs((1 + hv * hv) * huu - 2 * hu * hv * huv + (1 + hu * hu) * hvv) / (2 * w ** 1.5)
    assert abs(ff.mean_curvature - H) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 4.0), angles)
def test_polar_plane_christoffel_symbols(r, t):
    G = christoffel(evaluate_tower(polar_plane_chart(), [r, t], 2))
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -r
    expected[1, 0, 1] = expected[1, 1, 0] = 1 / r
    assert np.allclose(G, expected, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.2, 1.2), angles)
def test_gauss_equation_on_catenoid(u, v):
    tower = evaluate_tower(catenoid_chart(), [u, v], 3)
    ff = fundamental_forms(tower, AmbientSpace.euclidean(3))
    K = -1 / math.cosh(u) ** 4
    assert abs(sectional_curvature(tower) - K) < 1e-10
    assert abs(extrinsic_sectional(ff, [1, 0], [0, 1]) - K) < 1e-12


def small_sphere_in_s3(r):
    h = math.sqrt(1 - r * r)

    def ev(p):
        lat, lon = p
        cl = J.cos(lat)
        return [r * cl * J.cos(lon), r * cl * J.sin(lon), r * J.sin(lat), h + 0.0 * lat]

    return Chart(2, AmbientSpace.sphere(3), ((-1.2, 1.2), (-3, 3)), ev, "small-sphere")


@pytest.mark.parametrize("r", [0.3, 0.6, 1.0])
def test_small_sphere_in_three_sphere(r):
    ff = geometry_at(small_sphere_in_s3(r), [0.2, 0.5])
    # umbilical with H = sqrt(1 - r^2) / r in the unit 3-sphere
    assert abs(ff.mean_curvature - math.sqrt(1 - r * r) / r) < 1e-11
    assert relative_nullity(ff).index == (2 if r == 1.0 else 0)
    assert abs(extrinsic_sectional(ff, [1, 0], [0, 1]) - 1 / r ** 2) < 1e-10


def test_membership_residual_separates_ruling_and_profile():
    ff = geometry_at(circular_cylinder_chart(), [0.2, 0.1])
    assert membership_residual(ff, [0, 1]) < 1e-14
    assert membership_residual(ff, [1, 0]) > 0.5


def test_tower_batches_agree_with_single_points():
    pts = np.array([[0.1, 0.5, -0.3], [0.2, -0.4, 0.9]])
    tw = evaluate_tower(unit_sphere_chart(), pts, 2)
    for i in range(3):
        single = evaluate_tower(unit_sphere_chart(), pts[:, i], 2)
        assert np.allclose(tw.at(i).hessian, single.hessian)


def test_out_of_domain_point_raises():
    with pytest.raises(DomainError):
        evaluate_tower(unit_sphere_chart(), [2.0, 0.0], 1)


def test_pivoted_gram_schmidt_is_orthonormal_and_respects_pivot():
    rng = np.random.default_rng(0)
    V = rng.normal(size=(3, 5))
    Q, coeffs, order = pivoted_gram_schmidt(V)
    assert np.allclose(Q @ Q.T, np.eye(3), atol=1e-12)
    assert np.allclose(coeffs @ V, Q)
    # the longest vector is taken first
    assert order[0] == int(np.argmax(np.linalg.norm(V, axis=1)))
    _, _, fixed = pivoted_gram_schmidt(V, pivot=[2, 0, 1])
    assert fixed == [2, 0, 1]
