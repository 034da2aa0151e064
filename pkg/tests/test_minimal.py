import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullitylab.immersion import GeometryError, evaluate_tower, fundamental_forms, sectional_curvature
from nullitylab.minimal import (
    STOCK_DATA,
    HolomorphicSeries,
    catenoid_data,
    delaunay_profile,
    enneper_data,
    orthogonal_sum_hat,
    rotational_surface,
    weierstrass_chart,
)

coords = st.floats(-0.7, 0.7)
thetas = st.floats(0.0, 2 * math.pi)


@settings(max_examples=25, deadline=None)
@given(coords, coords)
def test_enneper_matches_closed_form(u, v):
    m = weierstrass_chart(enneper_data())
    z = u + 1j * v
    expected = np.array([(z / 2 - z**3 / 6).real, (1j * (z / 2 + z**3 / 6)).real, (z * z / 2).real])
    assert np.allclose(m.chart([u, v]), expected, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(coords, coords)
def test_catenoid_data_gives_a_catenoid(u, v):
    chart = weierstrass_chart(catenoid_data()).chart
    # (-cosh u cos v, -cosh u sin v, u), shifted so the base point maps to the origin
    expected = [1 - math.cosh(u) * math.cos(v), -math.cosh(u) * math.sin(v), u]
    assert np.allclose(chart([u, v]), expected, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(sorted(STOCK_DATA)), thetas, coords, coords)
def test_associated_family_is_minimal_isometric_and_conformal(name, theta, u, v):
    base = weierstrass_chart(STOCK_DATA[name]())
    m = weierstrass_chart(STOCK_DATA[name](), theta)
    tw, tw0 = evaluate_tower(m.chart, [u, v], 3), evaluate_tower(base.chart, [u, v], 3)
    ff = fundamental_forms(tw, m.chart.ambient)
    assert ff.mean_curvature < 1e-12 * ff.scale
    assert np.allclose(ff.metric, fundamental_forms(tw0, base.chart.ambient).metric, atol=1e-13)
    lam = m.conformal_factor([u, v])
    assert np.allclose(ff.metric, lam**2 * np.eye(2), atol=1e-12)
    # Gaussian curvature -k^2 from the data, checked intrinsically
    assert abs(sectional_curvature(tw) + m.principal_curvature([u, v]) ** 2) < 1e-9


def test_helicoid_is_conjugate_catenoid():
    m = weierstrass_chart(catenoid_data(), math.pi / 2)
    ff = fundamental_forms(evaluate_tower(m.chart, [0.3, 0.4], 2), m.chart.ambient)
    # helicoid: coordinate lines v = const are straight, so alpha(d_u, d_u) = 0
    assert np.linalg.norm(ff.alpha([1, 0], [1, 0])) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 1.5), thetas, coords, coords)
def test_orthogonal_sum_is_isometric_minimal(phi, theta, u, v):
    data = enneper_data()
    hat = orthogonal_sum_hat(data, theta, phi)
    g = weierstrass_chart(data, theta)
    ffh = fundamental_forms(evaluate_tower(hat, [u, v], 2), hat.ambient)
    ffg = fundamental_forms(evaluate_tower(g.chart, [u, v], 2), g.chart.ambient)
    assert np.allclose(ffh.metric, ffg.metric, atol=1e-13)
    assert ffh.mean_curvature < 1e-12 * ffh.scale


def test_orthogonal_sum_rejects_bad_angle_and_flat_points():
    with pytest.raises(ValueError):
        orthogonal_sum_hat(enneper_data(), 0.0, 0.0)
    flat = type(enneper_data())(HolomorphicSeries.polynomial([1.0]), HolomorphicSeries.polynomial([0.5]),
                                ((-0.5, 0.5), (-0.5, 0.5)), "plane")
    with pytest.raises(GeometryError, match="flat"):
        orthogonal_sum_hat(flat, 0.0, 0.5)


def test_series_domain_is_validated():
    with pytest.raises(GeometryError):
        weierstrass_chart(catenoid_data(extent=40.0))


def reference_profile(H, c0, n, sign, phi0, x0, x1, steps=20000):
    """Plain fixed-step RK4 on the profile ODE."""

    def f(y):
        p, d = y
        q = 1 + d * d
        k = c0 * q
        return np.array([d, (q + sign * p * math.sqrt(max(q * (n * n * H * H * q * q - k * k), 0.0))) / p])

    y = np.array([phi0, 0.0])
    h = (x1 - x0) / steps
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def test_delaunay_profile_matches_reference_integrator():
    prof, _ = delaunay_profile(0.2, 0.3, (0.5, 3.0), n=3, phi0=2.5, sign=-1)
    ref = reference_profile(0.2, 0.3, 3, -1, 2.5, 0.5, 3.0)
    assert abs(prof.phi[-1] - ref[0]) < 1e-9
    assert abs(prof.dphi[-1] - ref[1]) < 1e-9
    assert prof.ode_residual() < 1e-7
    assert prof.clamp_events == []


def test_delaunay_taylor_expansion_matches_samples():
    prof, _ = delaunay_profile(0.2, 0.3, (0.5, 3.0), n=3, phi0=2.5, sign=-1)
    i, j = 1000, 1040
    c = prof.taylor(prof.x[i], 6)
    dx = prof.x[j] - prof.x[i]
    approx = sum(c[m] * dx**m for m in range(7))
    assert abs(approx - prof.phi[j]) < 1e-10


@pytest.mark.parametrize("c0", [0.6, 0.7, -0.6, 0.0])
def test_delaunay_rejects_inconsistent_constants(c0):
    with pytest.raises(ValueError):
        delaunay_profile(0.2, c0, (0.5, 3.0), n=3)


def test_rotational_surface_of_constant_profile_is_a_cylinder():
    chart = rotational_surface(lambda x: x * 0.0 + 2.0, ((0.0, 1.0), (-3.0, 3.0)), layout="axial")
    ff = fundamental_forms(evaluate_tower(chart, [0.5, 0.4], 2), chart.ambient)
    assert abs(ff.mean_curvature - 0.25) < 1e-14
    with pytest.raises(Exception):
        rotational_surface(lambda x: x, ((-1.0, 1.0), (-3.0, 3.0)), layout="graph")
