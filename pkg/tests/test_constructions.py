import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullitylab import jets as J
from nullitylab.constructions import (
    bipolar_chart,
    compose_with_curve_cylinder,
    cylinder_chart,
    plane_curve_from_curvature,
    singular_mask,
)
from nullitylab.immersion import (
    AmbientSpace,
    Chart,
    DomainError,
    GeometryError,
    circular_cylinder_chart,
    evaluate_tower,
    fundamental_forms,
    plane_chart,
    relative_nullity,
)
from nullitylab.minimal import enneper_data, orthogonal_sum_hat
from nullitylab.nullity import Distribution, codazzi_symmetry_from_frame, local_frame, splitting_from_frame
from nullitylab.osculating import EllipticStructure, ellipticity_defect

FIBER = Distribution.coordinate(3, [2], "fiber")


def const(c):
    return lambda s: s * 0.0 + c


@pytest.fixture(scope="module")
def bipolar():
    return bipolar_chart(orthogonal_sum_hat(enneper_data(), 0.0, math.pi / 6))


def test_unit_curvature_gives_a_closed_unit_circle():
    curve = plane_curve_from_curvature(const(1.0), (0.0, 2 * math.pi), samples=2001)
    assert np.linalg.norm(curve.positions[-1] - curve.positions[0]) < 1e-10
    center = np.array([0.0, 1.0])
    assert np.max(np.abs(np.linalg.norm(curve.positions - center, axis=1) - 1.0)) < 1e-10


def test_clothoid_matches_fresnel_quadrature():
    curve = plane_curve_from_curvature(lambda s: s, (0.0, 2.0), samples=2001)
    # independent quadrature of (cos s^2/2, sin s^2/2) with composite Simpson
    s = np.linspace(0.0, 2.0, 40001)
    w = np.ones_like(s)
    w[1:-1:2], w[2:-1:2] = 4, 2
    h = s[1] - s[0]
    ref = h / 3 * np.array([w @ np.cos(s**2 / 2), w @ np.sin(s**2 / 2)])
    assert np.linalg.norm(curve.positions[-1] - ref) < 1e-10
    sk, k = curve.fd_curvature()
    assert np.max(np.abs(k - sk)) < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 2.9))
def test_curve_taylor_matches_state_and_curvature(s0):
    curve = plane_curve_from_curvature(lambda s: 0.5 + 0.3 * J.sin(s), (0.0, 3.0), samples=1501)
    c = curve.taylor(np.array(s0), 3)
    pos, T = curve.state(np.array(s0))
    assert np.allclose(c[0], pos) and np.allclose(c[1], T, atol=1e-12)
    # gamma'' = k N with N the left normal
    k = 0.5 + 0.3 * math.sin(s0)
    assert np.allclose(2 * c[2], k * np.array([-T[1], T[0]]), atol=1e-10)


def test_cylinder_over_circle_composed_with_plane():
    curve = plane_curve_from_curvature(const(1.0), (-2.5, 2.5), samples=1001)
    comp = compose_with_curve_cylinder(plane_chart(2.0), curve, axis=0)
    p = comp.at([0.3, 0.4])
    assert abs(p.H_f - 0.5) < 1e-12
    assert p.identity_residual < 1e-12 and p.gradient_residual < 1e-14


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_composition_identity_on_a_graph(u, v):
    def ev(p):
        x, y = p
        return [x, y, 0.4 * J.sin(x) * J.cos(y) + 0.2 * x * y]

    F = Chart(2, AmbientSpace.euclidean(3), ((-1.0, 1.0), (-1.0, 1.0)), ev, "graph")
    curve = plane_curve_from_curvature(lambda s: 0.5 + 0.3 * J.sin(s), (-1.0, 1.0), samples=1001)
    p = compose_with_curve_cylinder(F, curve, axis=2).at([u, v])
    assert p.identity_residual < 1e-9
    assert p.gradient_residual < 1e-12


def test_composition_rejects_out_of_range_heights():
    curve = plane_curve_from_curvature(const(1.0), (0.0, 0.5), samples=101)
    with pytest.raises(DomainError, match="outside"):
        compose_with_curve_cylinder(plane_chart(2.0), curve, axis=0)
    with pytest.raises(GeometryError):
        compose_with_curve_cylinder(cylinder_chart(plane_chart(), 1), curve, axis=0)


def test_cylinder_chart_appends_flat_factor():
    chart = cylinder_chart(circular_cylinder_chart(), 1)
    ff = fundamental_forms(evaluate_tower(chart, [0.2, 0.1, 0.3], 2), chart.ambient)
    assert relative_nullity(ff).index == 2
    assert abs(ff.mean_curvature - 1 / 3) < 1e-12
    with pytest.raises(ValueError):
        cylinder_chart(plane_chart(), 0)


def test_bipolar_rejects_low_codimension_and_non_conformal_bases():
    # negative control: a surface in R^3 has no bipolar map into S^{q-1} with q >= 4
    with pytest.raises(GeometryError, match="q >= 4"):
        bipolar_chart(circular_cylinder_chart())

    def ev(p):
        u, v = p
        return [u, 2.0 * v, u * v, 0.0 * u]

    with pytest.raises(GeometryError, match="conformal"):
        bipolar_chart(Chart(2, AmbientSpace.euclidean(4), ((-1, 1), (-1, 1)), ev, "stretched"))


@pytest.mark.parametrize("point", [[0.2, -0.3, 0.4], [-0.5, 0.6, 2.5], [0.0, 0.1, 5.0]])
def test_bipolar_map_is_elliptic_with_fiber_nullity(bipolar, point):
    chart = bipolar.chart
    assert chart.ambient == AmbientSpace.sphere(5)
    tw = evaluate_tower(chart, point, 2)
    assert abs(np.linalg.norm(tw.position) - 1.0) < 1e-13
    ff = fundamental_forms(tw, chart.ambient)
    lf = local_frame(tw, FIBER)
    st_ = splitting_from_frame(lf)
    C = st_.matrices[0]
    assert np.linalg.norm(C @ C + np.eye(2), 2) < 1e-9
    Jc = EllipticStructure.from_splitting(st_)
    assert ellipticity_defect(ff, Jc) < 1e-9
    assert codazzi_symmetry_from_frame(ff, lf) < 1e-9


def test_bipolar_mean_curvature_is_constant_on_fibers(bipolar):
    thetas = np.linspace(0.0, 2 * math.pi, 9)[:-1]
    pts = np.vstack([np.full_like(thetas, 0.3), np.full_like(thetas, -0.2), thetas])
    tw = evaluate_tower(bipolar.chart, pts, 2)
    H = [fundamental_forms(tw.at(i), bipolar.chart.ambient).mean_curvature for i in range(len(thetas))]
    assert np.ptp(H) < 1e-12 * max(H)
    assert not singular_mask(bipolar.chart, pts).any()
