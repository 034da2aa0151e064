import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullitylab import jets as J
from nullitylab.constructions import cylinder_chart
from nullitylab.immersion import AmbientSpace, Chart, evaluate_tower, fundamental_forms, graph_chart, unit_sphere_chart
from nullitylab.nullity import (
    Distribution,
    HypothesisError,
    ambient_splitting_tensor,
    check_hypotheses,
    check_totally_geodesic,
    local_frame,
    nullity_membership,
    residual_C1,
    residual_codazzi_symmetry,
    splitting_tensor,
    symmetry_residual,
)

S = 1 / math.sqrt(2)
RULING = Distribution.coordinate(2, [0], "ruling")


def cone():
    def ev(p):
        r, t = p
        return [S * r * J.cos(t), S * r * J.sin(t), S * r]

    return Chart(2, AmbientSpace.euclidean(3), ((0.2, 5.0), (-3.0, 3.0)), ev, "cone")


def spherical_cone():
    """Great-circle arcs from a fixed pole through a curve on a totally geodesic 2-sphere."""

    def ev(p):
        s, t = p
        cs, sn = J.cos(s), J.sin(s)
        # base curve: a small circle of latitude 0.4 on the equatorial 2-sphere
        return [cs * math.cos(0.4) * J.cos(t), cs * math.cos(0.4) * J.sin(t), cs * math.sin(0.4), sn]

    return Chart(2, AmbientSpace.sphere(3), ((-1.2, 1.2), (-3.0, 3.0)), ev, "spherical-cone")


@settings(max_examples=15, deadline=None)
@given(st.floats(0.4, 4.0), st.floats(-2.5, 2.5))
def test_cone_splitting_tensor_is_minus_inverse_radius(r, t):
    st_ = splitting_tensor(cone(), [r, t], RULING)
    oracle = ambient_splitting_tensor(cone(), [r, t], lambda p: [p[0] * 0 + 1, p[0] * 0])
    assert abs(st_.matrices[0, 0, 0] + 1 / r) < 1e-12
    assert np.allclose(st_.matrices[0], oracle, atol=1e-12)


def test_cylinder_over_a_surface_has_vanishing_splitting_tensor():
    chart = cylinder_chart(unit_sphere_chart(), 1)
    D = Distribution.coordinate(3, [2], "line")
    st_ = splitting_tensor(chart, [0.3, 0.4, 0.1], D)
    assert np.max(np.abs(st_.matrices)) < 1e-12
    assert check_totally_geodesic(chart, [0.3, 0.4, 0.1], D).passed


@pytest.mark.parametrize("point", [[0.5, 0.3], [2.0, -1.0], [4.0, 2.0]])
def test_euclidean_cone_satisfies_c1_and_codazzi_symmetry(point):
    assert residual_C1(cone(), point, RULING, c=0.0).residual < 1e-9
    assert residual_codazzi_symmetry(cone(), point, RULING).residual < 1e-12


def test_c1_with_wrong_curvature_constant_fails():
    # negative control: the Euclidean cone does not satisfy the identity with c = 1
    assert not residual_C1(cone(), [1.0, 0.2], RULING, c=1.0).passed


@pytest.mark.parametrize("point", [[0.3, 0.1], [-0.7, 1.5]])
def test_spherical_cone_satisfies_c1_with_unit_curvature(point):
    chart = spherical_cone()
    tower, ff, lf = check_hypotheses(chart, point, RULING)
    assert nullity_membership(ff, lf) < 1e-12
    # |d_t| = cos(s) cos(0.4), so nabla_{d_t} d_s = -tan(s) d_t and C = tan(s)
    C = splitting_tensor(chart, point, RULING).matrices[0, 0, 0]
    assert abs(C - math.tan(point[0])) < 1e-10
    assert residual_C1(chart, point, RULING, c=1.0).residual < 1e-9
    assert not residual_C1(chart, point, RULING, c=0.0).passed


def test_generic_direction_on_a_graph_fails_the_hypotheses():
    # negative control: a coordinate field on a curved graph is neither geodesic nor in the nullity
    chart = graph_chart(lambda x, y: x * x + 0.5 * y * y)
    with pytest.raises(HypothesisError, match="totally geodesic"):
        check_hypotheses(chart, [0.1, 0.2], RULING)
    tower = evaluate_tower(chart, [0.1, 0.2], 2)
    lf = local_frame(tower, RULING)
    assert nullity_membership(fundamental_forms(tower, chart.ambient), lf) > 0.1


def test_straight_rulings_outside_the_nullity_fail_membership_only():
    # hyperbolic paraboloid: x-lines are straight (geodesic) but the surface twists along them
    chart = graph_chart(lambda x, y: x * y)
    assert check_totally_geodesic(chart, [0.2, 0.3], RULING).passed
    with pytest.raises(HypothesisError, match="relative nullity"):
        check_hypotheses(chart, [0.2, 0.3], RULING)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(-3, 3))
def test_symmetry_residual_vanishes_for_commuting_pairs(a, lam):
    A = np.array([[a[0], a[1]], [a[1], a[2]]])
    assert symmetry_residual(A, lam * np.eye(2)) < 1e-14
    assert symmetry_residual(A, A) < 1e-14


def test_symmetry_residual_detects_rotation():
    A = np.diag([1.0, 2.0])
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert symmetry_residual(A, R) > 0.3
