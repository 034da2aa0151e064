"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` holds the Taylor coefficients ``d^a f / a!`` of a scalar
function of up to three variables, truncated at a fixed total order.  The
coefficient table has a leading axis indexed by multi-index and any number of
trailing batch axes, so a single jet can carry the expansion of the same
expression at many base points at once.

Coefficients are real (float64) or complex (complex128); all arithmetic runs
through the same convolution core.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

MultiIndex = tuple[int, ...]

MAX_DIMS = 3


class JetDomainError(ValueError):
    """An elementary function was applied outside its real domain."""


@dataclass(frozen=True)
class JetBudget:
    max_order: int = 5
    dims: int = 2

    def __post_init__(self):
        if not 1 <= self.dims <= MAX_DIMS:
            raise ValueError(f"dims must be in 1..{MAX_DIMS}, got {self.dims}")
        if self.max_order < 0:
            raise ValueError("max_order must be nonnegative")


def multi_indices(dims: int, order: int) -> tuple[MultiIndex, ...]:
    """All exponent tuples of total degree <= order, graded then lexicographic."""
    return _layout(dims, order).indices


def n_coeffs(dims: int, order: int) -> int:
    return math.comb(order + dims, dims)


class _Layout:
    """Index bookkeeping shared by every jet with the same (dims, order)."""

    def __init__(self, dims: int, order: int):
        self.dims = dims
        self.order = order
        idx: list[MultiIndex] = []
        for total in range(order + 1):
            idx.extend(_graded(dims, total))
        self.indices = tuple(idx)
        self.position = {a: i for i, a in enumerate(idx)}
        self.degree = np.array([sum(a) for a in idx], dtype=int)
        self.factorial = np.array(
            [math.prod(math.factorial(e) for e in a) for a in idx], dtype=float
        )

        left, right, target = [], [], []
        for i, a in enumerate(idx):
            for j, b in enumerate(idx):
                c = tuple(x + y for x, y in zip(a, b))
                if sum(c) <= order:
                    left.append(i)
                    right.append(j)
                    target.append(self.position[c])
        perm = np.argsort(np.array(target), kind="stable")
        self.mul_left = np.array(left)[perm]
        self.mul_right = np.array(right)[perm]
        tgt = np.array(target)[perm]
        self.mul_starts = np.flatnonzero(np.r_[True, tgt[1:] != tgt[:-1]])


def _graded(dims: int, total: int) -> list[MultiIndex]:
    if dims == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _graded(dims - 1, total - first):
            out.append((first,) + rest)
    return out


@lru_cache(maxsize=None)
def _layout(dims: int, order: int) -> _Layout:
    return _Layout(dims, order)


@lru_cache(maxsize=None)
def _derivative_map(dims: int, order: int, var: int):
    """Source positions and multipliers for d/dx_var, landing at order-1."""
    src_lay = _layout(dims, order)
    dst_lay = _layout(dims, order - 1)
    src = np.empty(len(dst_lay.indices), dtype=int)
    mult = np.empty(len(dst_lay.indices))
    for k, a in enumerate(dst_lay.indices):
        b = list(a)
        b[var] += 1
        src[k] = src_lay.position[tuple(b)]
        mult[k] = b[var]
    return src, mult


@lru_cache(maxsize=None)
def _truncate_map(dims: int, order: int, new_order: int):
    lay = _layout(dims, order)
    return np.flatnonzero(lay.degree <= new_order)


class Jet:
    """Truncated Taylor expansion of a scalar function.

    ``coeffs[k]`` is the coefficient of ``x^a`` with ``a = multi_indices(dims,
    order)[k]``; trailing axes of ``coeffs`` are batch axes.
    """

    __slots__ = ("dims", "order", "coeffs")
    __array_priority__ = 1000

    def __init__(self, dims: int, order: int, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.dtype.kind not in "fc":
            coeffs = coeffs.astype(float)
        if coeffs.shape[0] != n_coeffs(dims, order):
            raise ValueError(
                f"coefficient table has {coeffs.shape[0]} rows, expected "
                f"{n_coeffs(dims, order)} for dims={dims}, order={order}"
            )
        self.dims = dims
        self.order = order
        self.coeffs = coeffs

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, dims: int, order: int) -> "Jet":
        value = np.asarray(value)
        dtype = complex if value.dtype.kind == "c" else float
        c = np.zeros((n_coeffs(dims, order),) + value.shape, dtype=dtype)
        c[0] = value
        return cls(dims, order, c)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def value(self):
        """Constant term (the function value at the base point)."""
        return self.coeffs[0]

    @property
    def is_complex(self) -> bool:
        return self.coeffs.dtype.kind == "c"

    @property
    def real(self) -> "Jet":
        return Jet(self.dims, self.order, self.coeffs.real.copy())

    @property
    def imag(self) -> "Jet":
        return Jet(self.dims, self.order, self.coeffs.imag.copy())

    def conj(self) -> "Jet":
        return Jet(self.dims, self.order, np.conj(self.coeffs))

    def coeff(self, idx: MultiIndex):
        return self.coeffs[_layout(self.dims, self.order).position[tuple(idx)]]

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        keep = _truncate_map(self.dims, self.order, order)
        return Jet(self.dims, order, self.coeffs[keep])

    def __getitem__(self, item) -> "Jet":
        """Index into the batch axes."""
        if not isinstance(item, tuple):
            item = (item,)
        return Jet(self.dims, self.order, self.coeffs[(slice(None),) + item])

    def __repr__(self):
        return f"Jet(dims={self.dims}, order={self.order}, batch={self.batch_shape})"

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.dims != self.dims or other.order != self.order:
                raise ValueError(
                    f"jet mismatch: (dims={self.dims}, order={self.order}) vs "
                    f"(dims={other.dims}, order={other.order})"
                )
            return other
        return Jet.constant(other, self.dims, self.order)

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other)
            dtype = np.result_type(self.coeffs.dtype, other.dtype, float)
            c = self.coeffs.astype(dtype, copy=True)
            c[0] = c[0] + other
            return Jet(self.dims, self.order, c)
        other = self._coerce(other)
        return Jet(self.dims, self.order, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.dims, self.order, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.dims, self.order, self.coeffs * np.asarray(other))
        other = self._coerce(other)
        lay = _layout(self.dims, self.order)
        prod = self.coeffs[lay.mul_left] * other.coeffs[lay.mul_right]
        return Jet(self.dims, self.order, np.add.reduceat(prod, lay.mul_starts, axis=0))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.dims, self.order, self.coeffs / np.asarray(other))
        return self * reciprocal(self._coerce(other))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)):
            return pow_int(self, int(n))
        return power(self, n)

    # calculus -----------------------------------------------------------
    def derivative(self, var: int) -> "Jet":
        """Partial derivative jet in variable ``var`` (order drops by one)."""
        if not 0 <= var < self.dims:
            raise ValueError(f"variable {var} out of range for dims={self.dims}")
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, mult = _derivative_map(self.dims, self.order, var)
        mult = mult.reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.dims, self.order - 1, self.coeffs[src] * mult)

    def partials(self):
        """All partial derivatives ``d^a f`` stacked along the leading axis."""
        fac = _layout(self.dims, self.order).factorial
        return self.coeffs * fac.reshape((-1,) + (1,) * len(self.batch_shape))


def seed_variables(point, budget: JetBudget) -> list[Jet]:
    """Independent-variable jets at ``point``.

    ``point`` has shape ``(dims,)`` or ``(dims, *batch)``.
    """
    point = np.asarray(point, dtype=float)
    if point.shape[0] != budget.dims:
        raise ValueError(
            f"point has dimension {point.shape[0]}, budget expects {budget.dims}"
        )
    out = []
    lay = _layout(budget.dims, budget.max_order)
    for i in range(budget.dims):
        c = np.zeros((len(lay.indices),) + point.shape[1:])
        c[0] = point[i]
        if budget.max_order >= 1:
            unit = tuple(1 if k == i else 0 for k in range(budget.dims))
            c[lay.position[unit]] = 1.0
        out.append(Jet(budget.dims, budget.max_order, c))
    return out


def jet_arith(op: str, a: Jet, b: Jet | None = None) -> Jet:
    """Named arithmetic dispatch: add, sub, mul, div, neg."""
    if op == "neg":
        return -a
    if b is None:
        raise ValueError(f"operation {op!r} needs two operands")
    ops = {
        "add": Jet.__add__,
        "sub": Jet.__sub__,
        "mul": Jet.__mul__,
        "div": Jet.__truediv__,
    }
    if op not in ops:
        raise ValueError(f"unknown jet operation {op!r}")
    return ops[op](a, b)


def partial(a: Jet, idx: MultiIndex):
    """``d^idx f`` at the base point: the stored coefficient times ``idx!``."""
    idx = tuple(int(e) for e in idx)
    if len(idx) != a.dims:
        raise ValueError(f"multi-index {idx} has wrong length for dims={a.dims}")
    if sum(idx) > a.order:
        raise ValueError(f"multi-index order {sum(idx)} exceeds jet order {a.order}")
    return a.coeff(idx) * math.prod(math.factorial(e) for e in idx)


# univariate composition ---------------------------------------------------

def compose_series(a: Jet, series) -> Jet:
    """Compose a univariate series with ``a``.

    ``series[m]`` is the m-th Taylor coefficient of the outer function at
    ``a.value`` (shape broadcastable to the batch); terms above ``a.order``
    are ignored.
    """
    h = Jet(a.dims, a.order, a.coeffs.copy())
    h.coeffs[0] = 0
    top = min(len(series) - 1, a.order)
    acc = Jet.constant(np.broadcast_to(series[top], a.batch_shape).copy(), a.dims, a.order)
    for m in range(top - 1, -1, -1):
        acc = acc * h
        acc = acc + series[m]
    return acc


def _check_real_domain(a: Jet, ok, name: str):
    if not a.is_complex and not np.all(ok):
        raise JetDomainError(f"{name} undefined at constant term {a.value}")


def reciprocal(a: Jet) -> Jet:
    a0 = a.value
    if np.any(a0 == 0):
        raise ZeroDivisionError("division by a jet with zero constant term")
    inv = 1.0 / a0
    series = [inv]
    for _ in range(a.order):
        series.append(-series[-1] * inv)
    return compose_series(a, series)


def exp(a: Jet) -> Jet:
    e = np.exp(a.value)
    return compose_series(a, [e / math.factorial(m) for m in range(a.order + 1)])


def sin(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cyc = [s, c, -s, -c]
    return compose_series(a, [cyc[m % 4] / math.factorial(m) for m in range(a.order + 1)])


def cos(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cyc = [c, -s, -c, s]
    return compose_series(a, [cyc[m % 4] / math.factorial(m) for m in range(a.order + 1)])


def log(a: Jet) -> Jet:
    a0 = a.value
    _check_real_domain(a, a0 > 0 if not a.is_complex else True, "log")
    if np.any(a0 == 0):
        raise JetDomainError("log undefined at zero")
    series = [np.log(a0)]
    for m in range(1, a.order + 1):
        series.append((-1) ** (m + 1) / (m * a0**m))
    return compose_series(a, series)


def power(a: Jet, p: float) -> Jet:
    """Real power ``a**p`` via the generalized binomial series."""
    a0 = a.value
    _check_real_domain(a, a0 > 0 if not a.is_complex else True, f"power {p}")
    series = []
    coef = 1.0
    for m in range(a.order + 1):
        series.append(coef * a0 ** (p - m))
        coef *= (p - m) / (m + 1)
    return compose_series(a, series)


def sqrt(a: Jet) -> Jet:
    return power(a, 0.5)


def pow_int(a: Jet, n: int) -> Jet:
    if n < 0:
        return reciprocal(pow_int(a, -n))
    result = Jet.constant(np.ones(a.batch_shape, dtype=a.coeffs.dtype), a.dims, a.order)
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def atan(a: Jet) -> Jet:
    a0 = a.value
    # series of 1/(1 + (a0 + t)^2) by the recursion q * p = 1
    p0, p1 = 1 + a0 * a0, 2 * a0
    q = [1.0 / p0]
    for m in range(1, a.order):
        prev2 = q[m - 2] if m >= 2 else 0.0
        q.append(-(p1 * q[m - 1] + prev2) / p0)
    series = [np.arctan(a0)] + [q[m - 1] / m for m in range(1, a.order + 1)]
    return compose_series(a, series)


ELEMENTARY: dict[str, Callable[..., Jet]] = {
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "pow_int": pow_int,
    "atan": atan,
}


def jet_elementary(fn: str, a: Jet, *args) -> Jet:
    if fn not in ELEMENTARY:
        raise ValueError(f"unknown elementary function {fn!r}")
    return ELEMENTARY[fn](a, *args)


def cosh(a: Jet) -> Jet:
    e = exp(a)
    return (e + reciprocal(e)) * 0.5


def sinh(a: Jet) -> Jet:
    e = exp(a)
    return (e - reciprocal(e)) * 0.5


# univariate helpers --------------------------------------------------------

def antiderivative(a: Jet, constant=0.0) -> Jet:
    """Integral of a univariate jet, one order higher."""
    if a.dims != 1:
        raise ValueError("antiderivative is defined for univariate jets only")
    c = np.zeros((a.order + 2,) + a.batch_shape, dtype=a.coeffs.dtype)
    c[0] = constant
    m = np.arange(1, a.order + 2).reshape((-1,) + (1,) * len(a.batch_shape))
    c[1:] = a.coeffs / m
    return Jet(1, a.order + 1, c)


def univariate_coeffs(a: Jet):
    if a.dims != 1:
        raise ValueError("expected a univariate jet")
    return a.coeffs


def stack_values(jets: Sequence[Jet]):
    """Constant terms of several jets stacked on a new trailing axis."""
    return np.stack([j.value for j in jets], axis=-1)
