"""Independent numerical oracles: Richardson-extrapolated finite differences and
a battery of composite test functions usable on floats and on jets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable

import numpy as np

from nullitylab import jets as J
from nullitylab.jets import JetBudget


@lru_cache(maxsize=None)
def central_weights(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the narrowest symmetric stencil for d^order/dx^order."""
    p = max(1, (order + 1) // 2)
    offs = np.arange(-p, p + 1, dtype=float)
    V = np.vander(offs, increasing=True).T  # rows m: offs**m
    rhs = np.zeros(len(offs))
    rhs[order] = math.factorial(order)
    return offs, np.linalg.solve(V, rhs)


def fd_partial(f: Callable[[np.ndarray], float], x, alpha, h: float) -> float:
    """Tensor-product central difference for the mixed partial d^alpha f at x."""
    x = np.asarray(x, dtype=float)
    stencils = [central_weights(a) if a else (np.zeros(1), np.ones(1)) for a in alpha]
    total = 0.0
    for combo in product(*[range(len(s[0])) for s in stencils]):
        w = 1.0
        pt = x.copy()
        for i, j in enumerate(combo):
            off, wt = stencils[i][0][j], stencils[i][1][j]
            w *= wt
            pt[i] += off * h
        total += w * f(pt)
    return total / h ** sum(alpha)


def richardson_partial(f, x, alpha, h: float = 0.1, levels: int = 4) -> float:
    """Richardson tableau in h^2 over steps h, h/2, ..."""
    col = [fd_partial(f, x, alpha, h / 2**k) for k in range(levels)]
    for m in range(1, levels):
        fac = 4.0**m
        col = [(fac * col[k + 1] - col[k]) / (fac - 1) for k in range(len(col) - 1)]
    return float(col[0])


class _FloatOps:
    exp = staticmethod(np.exp)
    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)
    log = staticmethod(np.log)
    sqrt = staticmethod(np.sqrt)
    atan = staticmethod(np.arctan)
    cosh = staticmethod(np.cosh)
    sinh = staticmethod(np.sinh)

    @staticmethod
    def power(a, p):
        return np.power(a, p)


class _JetOps:
    exp = staticmethod(J.exp)
    sin = staticmethod(J.sin)
    cos = staticmethod(J.cos)
    log = staticmethod(J.log)
    sqrt = staticmethod(J.sqrt)
    atan = staticmethod(J.atan)
    cosh = staticmethod(J.cosh)
    sinh = staticmethod(J.sinh)

    @staticmethod
    def power(a, p):
        return J.power(a, p)


FLOAT_OPS, JET_OPS = _FloatOps(), _JetOps()


@dataclass(frozen=True)
class BatteryFunction:
    name: str
    dims: int
    body: Callable  # body(ops, *vars)
    point: tuple[float, ...]


BATTERY: list[BatteryFunction] = [
    BatteryFunction("exp-sin", 1, lambda m, x: m.exp(m.sin(x)), (0.3,)),
    BatteryFunction("log-1px2", 1, lambda m, x: m.log(1 + x * x), (0.7,)),
    BatteryFunction("sqrt-cos", 1, lambda m, x: m.sqrt(2 + m.cos(x)), (-0.4,)),
    BatteryFunction("atan-rational", 1, lambda m, x: m.atan(x / (1 + x * x)), (0.5,)),
    BatteryFunction("power-frac", 1, lambda m, x: m.power(1.5 + x, 2.5), (0.2,)),
    BatteryFunction("cosh-sinh", 1, lambda m, x: m.cosh(x) * m.sinh(0.5 * x), (0.6,)),
    BatteryFunction("reciprocal", 1, lambda m, x: 1 / (3 + x * x * x), (0.4,)),
    BatteryFunction("product-xy", 2, lambda m, x, y: x * y * m.exp(x - y), (0.3, -0.2)),
    BatteryFunction("sin-sum", 2, lambda m, x, y: m.sin(x + 2 * y) * m.cos(x * y), (0.4, 0.1)),
    BatteryFunction("log-norm", 2, lambda m, x, y: m.log(1 + x * x + y * y), (0.5, -0.6)),
    BatteryFunction("sqrt-norm", 2, lambda m, x, y: m.sqrt(1 + x * x + 2 * y * y), (0.2, 0.3)),
    BatteryFunction("atan2-like", 2, lambda m, x, y: m.atan(y / (2 + x)), (0.1, 0.7)),
    BatteryFunction("exp-quotient", 2, lambda m, x, y: m.exp(x) / (2 + m.sin(y)), (-0.3, 0.8)),
    BatteryFunction("power-mixed", 2, lambda m, x, y: m.power(2 + x * y, 1.5) * m.cos(y), (0.4, 0.5)),
    BatteryFunction("catenoid-x", 2, lambda m, u, v: m.cosh(u) * m.cos(v), (0.3, 1.1)),
    BatteryFunction("xyz-exp", 3, lambda m, x, y, z: x * y * z * m.exp(-(x * x + y * y + z * z)), (0.3, 0.4, -0.5)),
    BatteryFunction("sin-prod3", 3, lambda m, x, y, z: m.sin(x * y + z) / (2 + m.cos(x - z)), (0.2, -0.4, 0.6)),
    BatteryFunction("log3", 3, lambda m, x, y, z: m.log(3 + x + y * z) * m.sqrt(1 + z * z), (0.1, 0.5, 0.3)),
    BatteryFunction("unit-tangent", 3,
                    lambda m, u, v, t: (m.cos(t) * m.cosh(u) + m.sin(t) * v) / m.sqrt(m.cosh(u) ** 2 + v * v),
                    (0.2, 0.3, 0.9)),
    BatteryFunction("atan3", 3, lambda m, x, y, z: m.atan(x + y * y) * m.exp(0.5 * z) - x * y * z, (0.3, 0.2, -0.1)),
]


def jet_partials(fn: BatteryFunction, order: int = 4) -> dict[tuple[int, ...], float]:
    seeds = J.seed_variables(np.asarray(fn.point, dtype=float), JetBudget(order, fn.dims))
    out = fn.body(JET_OPS, *seeds)
    idx = J.multi_indices(fn.dims, order)
    vals = out.partials()
    return {a: float(v) for a, v in zip(idx, vals)}


def fd_partials(fn: BatteryFunction, order: int = 4, h: float = 0.1, levels: int = 4) -> dict[tuple[int, ...], float]:
    f = lambda p: float(fn.body(FLOAT_OPS, *p))  # noqa: E731
    return {a: richardson_partial(f, fn.point, a, h, levels) for a in J.multi_indices(fn.dims, order)}


def battery_errors(order: int = 4) -> dict[str, float]:
    """Worst relative jet/finite-difference disagreement per battery function.

    Each partial is compared relative to the largest partial of the same total
    order, so derivatives that happen to vanish do not inflate the error.
    """
    result = {}
    for fn in BATTERY:
        a, b = jet_partials(fn, order), fd_partials(fn, order)
        worst = 0.0
        for s in range(order + 1):
            keys = [k for k in a if sum(k) == s]
            scale = max(max(abs(b[k]) for k in keys), 1e-300)
            worst = max(worst, max(abs(a[k] - b[k]) for k in keys) / scale)
        result[fn.name] = worst
    return result
