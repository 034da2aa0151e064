import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullitylab import jets as J
from nullitylab.jets import JetBudget, JetDomainError
from nullitylab.oracles import richardson_partial

finite = st.floats(-1.0, 1.0, allow_nan=False)


def seeds(point, order=4):
    point = np.asarray(point, dtype=float)
    return J.seed_variables(point, JetBudget(order, len(point)))


def test_multi_indices_are_graded_and_counted():
    idx = J.multi_indices(2, 3)
    assert len(idx) == J.n_coeffs(2, 3) == 10
    assert [sum(a) for a in idx] == sorted(sum(a) for a in idx)
    assert idx[0] == (0, 0)


def test_budget_rejects_bad_dims():
    with pytest.raises(ValueError):
        JetBudget(3, 4)
    with pytest.raises(ValueError):
        JetBudget(-1, 2)


def test_exp_coefficients_are_inverse_factorials():
    (x,) = seeds([0.0], order=6)
    c = J.exp(x).coeffs
    assert np.allclose(c, [1 / math.factorial(k) for k in range(7)], atol=1e-15)


def test_sin_partials_cycle():
    (x,) = seeds([0.7], order=5)
    p = J.sin(x).partials()
    expected = [math.sin(0.7), math.cos(0.7), -math.sin(0.7), -math.cos(0.7), math.sin(0.7), math.cos(0.7)]
    assert np.allclose(p, expected, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(finite, finite)
def test_product_rule_matches_independent_multiplication(a, b):
    x, y = seeds([a, b], order=3)
    f = J.sin(x) * J.exp(y)
    g = x * y + 1
    lhs = (f * g).derivative(0)
    rhs = f.derivative(0) * g.truncate(2) + f.truncate(2) * g.derivative(0)
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-1, 1))
def test_log_inverts_exp_and_sqrt_squares(a, b):
    x, y = seeds([a, b], order=4)
    r = x * x + y * y + 1
    assert np.allclose(J.log(J.exp(r)).coeffs, r.coeffs, atol=1e-11)
    s = J.sqrt(r)
    assert np.allclose((s * s).coeffs, r.coeffs, atol=1e-11)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_atan_derivative_is_rational(a, b):
    x, y = seeds([a, b], order=3)
    u = x + 0.5 * y
    lhs = J.atan(u).derivative(0)
    rhs = (u.derivative(0) / (1 + u * u).truncate(2))
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_three_variable_mixed_partial_against_finite_differences(a, b, c):
    x, y, z = seeds([a, b, c], order=3)
    f = J.cos(x * y) * J.exp(z) / (2 + x * x)
    jet_val = J.partial(f, (1, 1, 1))
    fd = richardson_partial(lambda p: math.cos(p[0] * p[1]) * math.exp(p[2]) / (2 + p[0] ** 2),
                            [a, b, c], (1, 1, 1))
    assert abs(float(jet_val) - fd) <= 1e-6 * max(1.0, abs(fd))


def test_batch_axes_trail_coefficients():
    pts = np.array([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]])
    x, y = J.seed_variables(pts, JetBudget(2, 2))
    f = J.exp(x) * y
    assert f.batch_shape == (3,)
    for k in range(3):
        xs, ys = seeds(pts[:, k], order=2)
        assert np.allclose(f[k].coeffs, (J.exp(xs) * ys).coeffs)


def test_complex_jets_follow_holomorphic_rules():
    x, y = seeds([0.3, -0.2], order=3)
    z = x + 1j * y
    w = J.exp(z)
    # Cauchy-Riemann: d/dy = i d/dx
    assert np.allclose(w.derivative(1).coeffs, 1j * w.derivative(0).coeffs, atol=1e-14)


def test_domain_errors():
    (x,) = seeds([0.0], order=2)
    with pytest.raises(JetDomainError):
        J.log(x)
    with pytest.raises(ZeroDivisionError):
        1 / x
    with pytest.raises(JetDomainError):
        J.sqrt(x - 1)


def test_mismatched_jets_raise():
    (x,) = seeds([0.0], order=2)
    (y,) = seeds([0.0], order=3)
    with pytest.raises(ValueError, match="mismatch"):
        x + y


def test_compose_series_matches_direct_exp():
    x, y = seeds([0.2, 0.1], order=4)
    u = x * y + x
    series = [math.exp(float(u.value)) / math.factorial(k) for k in range(5)]
    assert np.allclose(J.compose_series(u, series).coeffs, J.exp(u).coeffs, atol=1e-13)


def test_antiderivative_inverts_derivative():
    (x,) = seeds([0.4], order=5)
    f = J.sin(x) * x
    back = J.antiderivative(f.derivative(0), constant=f.value)
    assert np.allclose(back.coeffs, f.coeffs, atol=1e-14)
