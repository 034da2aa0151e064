"""Submanifold factories: unit tangent bundles of surfaces mapped into spheres,
products with flat factors, plane curves of prescribed curvature and their
cylinders composed with hypersurfaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from nullitylab import jets as J
from nullitylab.immersion import (
    SINGULAR_RATIO,
    AmbientSpace,
    Chart,
    DomainError,
    GeometryError,
    evaluate_tower,
    fundamental_forms,
)
from nullitylab.jets import Jet, JetBudget

CONFORMAL_TOL = 1e-8


# ---------------------------------------------------------------------------
# unit tangent bundle into the sphere

def _conformal_defect(g: Chart, points: np.ndarray) -> float:
    tw = evaluate_tower(g, points, 1)
    jac = np.moveaxis(tw.partials[1:3], 0, -2)  # (*batch, 2, M)
    G = jac @ np.swapaxes(jac, -1, -2)
    lam2 = 0.5 * (G[..., 0, 0] + G[..., 1, 1])
    d = np.maximum(np.abs(G[..., 0, 0] - G[..., 1, 1]), np.abs(G[..., 0, 1])) / lam2
    return float(np.max(d))


def _box_samples(domain, n: int = 5) -> np.ndarray:
    axes = [np.linspace(lo, hi, n) for lo, hi in domain]
    return np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(domain), -1)


@dataclass
class UnitTangentChart:
    """The map (u, v, theta) -> (cos theta g_u + sin theta g_v) / lambda."""

    base: Chart
    chart: Chart

    def conformal_factor(self, u, v) -> np.ndarray:
        tw = evaluate_tower(self.base, np.array([u, v], dtype=float), 1)
        return np.linalg.norm(tw.partials[1], axis=-1)

    def singular_mask(self, points: np.ndarray) -> np.ndarray:
        return singular_mask(self.chart, points)


def singular_mask(chart: Chart, points: np.ndarray) -> np.ndarray:
    """True where the induced metric degenerates (smallest/largest eigenvalue below threshold)."""
    points = np.asarray(points, dtype=float)
    tw = evaluate_tower(chart, points, 1)
    n = chart.intrinsic_dim
    jac = np.moveaxis(tw.partials[1:1 + n], 0, -2)
    ev = np.linalg.eigvalsh(jac @ np.swapaxes(jac, -1, -2))
    return ev[..., 0] <= SINGULAR_RATIO * ev[..., -1]


def bipolar_chart(g: Chart, theta_range=(-4 * np.pi, 4 * np.pi), conformal_tol: float = CONFORMAL_TOL) -> UnitTangentChart:
    """Unit tangent vectors of a conformal surface, as a chart into the unit sphere."""
    if g.intrinsic_dim != 2:
        raise GeometryError("bipolar construction needs a surface")
    if g.ambient.kind != "euclidean":
        raise GeometryError("base surface must lie in Euclidean space")
    q = g.ambient.coords
    if q < 4:
        raise GeometryError(f"base surface must lie in R^q with q >= 4, got q = {q}")
    defect = _conformal_defect(g, _box_samples(g.domain))
    if defect > conformal_tol:
        raise GeometryError(f"base surface is not conformal (relative defect {defect:.2e})")

    def ev(params):
        u, v, t = params
        K = u.order - 1
        coords = g.evaluator([u, v])
        gu = [c.derivative(0) for c in coords]
        gv = [c.derivative(1) for c in coords]
        lam2 = sum((a * a + b * b for a, b in zip(gu, gv)), start=gu[0] * 0.0) * 0.5
        inv = 1.0 / J.sqrt(lam2)
        tt = t.truncate(K)
        c, s = J.cos(tt), J.sin(tt)
        return [(c * a + s * b) * inv for a, b in zip(gu, gv)]

    domain = tuple(g.domain) + (tuple(theta_range),)
    chart = Chart(3, AmbientSpace.sphere(q - 1), domain, ev, f"bipolar[{g.label}]",
                  order_boost=g.order_boost + 1)
    return UnitTangentChart(g, chart)


# ---------------------------------------------------------------------------
# products

def cylinder_chart(g: Chart, extra: int = 1, extent: float = 1.0) -> Chart:
    """g x id on R^extra; the new parameters are appended and copied into new coordinates."""
    if extra < 1:
        raise ValueError("extra must be at least 1")
    if g.ambient.kind != "euclidean":
        raise GeometryError("products are formed with Euclidean charts")
    n = g.intrinsic_dim

    def ev(params):
        return list(g.evaluator(params[:n])) + list(params[n:])

    domain = tuple(g.domain) + ((-extent, extent),) * extra
    return Chart(n + extra, AmbientSpace.euclidean(g.ambient.coords + extra), domain, ev,
                 f"{g.label}xR{extra}", order_boost=g.order_boost)


# ---------------------------------------------------------------------------
# plane curves

JetFunction = Callable[[Jet], Jet]


def _kvalues(k: JetFunction, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.broadcast_to(np.asarray(k(Jet.constant(s, 1, 0)).value, dtype=float), s.shape)


def _frenet_field(kv, y):
    # y = (x, y, Tx, Ty) along the last axis; kv the curvature values
    T = y[..., 2:]
    N = np.stack([-T[..., 1], T[..., 0]], axis=-1)
    return np.concatenate([T, np.asarray(kv)[..., None] * N], axis=-1)


def _frenet_step(k: JetFunction, s, y, h):
    """One renormalized RK4 step from s to s + h (arrays allowed)."""
    h_ = np.asarray(h)[..., None]
    k0, km, k1 = _kvalues(k, s), _kvalues(k, s + h / 2), _kvalues(k, s + h)
    a = _frenet_field(k0, y)
    b = _frenet_field(km, y + h_ / 2 * a)
    c = _frenet_field(km, y + h_ / 2 * b)
    d = _frenet_field(k1, y + h_ * c)
    out = y + h_ / 6 * (a + 2 * b + 2 * c + d)
    T = out[..., 2:]
    out[..., 2:] = T / np.linalg.norm(T, axis=-1, keepdims=True)
    return out


@dataclass
class PlaneCurve:
    """Unit-speed plane curve with signed curvature k, sampled by arclength."""

    s: np.ndarray
    positions: np.ndarray  # (N, 2)
    tangents: np.ndarray  # (N, 2)
    curvature: JetFunction
    max_renormalization: float = 0.0

    @property
    def normals(self) -> np.ndarray:
        return np.stack([-self.tangents[:, 1], self.tangents[:, 0]], axis=-1)

    @property
    def s_range(self) -> tuple[float, float]:
        return float(self.s[0]), float(self.s[-1])

    def state(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Position and unit tangent at arbitrary s (arrays)."""
        s = np.asarray(s, dtype=float)
        lo, hi = self.s_range
        if np.any(s < lo - 1e-12) or np.any(s > hi + 1e-12):
            raise DomainError(f"arclength outside [{lo}, {hi}]")
        i = np.clip(np.rint((s - lo) / (self.s[1] - self.s[0])).astype(int), 0, len(self.s) - 1)
        y = np.concatenate([self.positions[i], self.tangents[i]], axis=-1)
        s0 = self.s[i]
        steps = 4
        h = (s - s0) / steps
        for j in range(steps):
            y = _frenet_step(self.curvature, s0 + j * h, y, h)
        return y[..., :2], y[..., 2:]

    def taylor(self, s, order: int) -> np.ndarray:
        """Taylor coefficients of gamma at s: shape (order + 1, *s.shape, 2)."""
        s = np.asarray(s, dtype=float)
        pos, T0 = self.state(s)
        N0 = np.stack([-T0[..., 1], T0[..., 0]], axis=-1)
        out = np.zeros((order + 1,) + s.shape + (2,))
        out[0] = pos
        if order == 0:
            return out
        t = J.seed_variables(s[None], JetBudget(max(order - 1, 0), 1))[0]
        kj = self.curvature(t)
        dpsi = J.antiderivative(kj)  # order `order`
        dpsi = dpsi.truncate(order - 1)
        c, sn = J.cos(dpsi), J.sin(dpsi)
        for comp in range(2):
            Tc = c * T0[..., comp] + sn * N0[..., comp]
            g = J.antiderivative(Tc)
            out[1:, ..., comp] = g.coeffs[1:]
        return out

    def __call__(self, s: Jet) -> list[Jet]:
        """gamma evaluated on a (multivariate) jet."""
        coeffs = self.taylor(s.value, s.order)
        return [J.compose_series(s, coeffs[..., i]) for i in range(2)]

    def fd_curvature(self, h: float = 1e-2) -> tuple[np.ndarray, np.ndarray]:
        """Signed curvature from second differences of the sampled positions,
        Richardson-combined over spacings h and 2h.  Returns (s, k)."""
        step = self.s[1] - self.s[0]
        m = max(1, int(round(h / step)))
        p = self.positions
        idx = np.arange(2 * m, len(p) - 2 * m)

        def at(mm):
            lo, c, hi = p[idx - mm], p[idx], p[idx + mm]
            d1 = (hi - lo) / (2 * mm * step)
            d2 = (hi - 2 * c + lo) / (mm * step) ** 2
            return (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / np.linalg.norm(d1, axis=1) ** 3
        return self.s[idx], (4 * at(m) - at(2 * m)) / 3


def plane_curve_from_curvature(k: JetFunction, s_range, samples: int = 2001,
                               start=(0.0, 0.0), angle: float = 0.0) -> PlaneCurve:
    """Integrate gamma' = T, T' = k N, N' = -k T with RK4 and unit renormalization."""
    s = np.linspace(float(s_range[0]), float(s_range[1]), samples)
    # curvature at all nodes and midpoints in one vectorized call
    k_nodes = _kvalues(k, s)
    k_mid = _kvalues(k, 0.5 * (s[:-1] + s[1:]))
    y = np.array([start[0], start[1], np.cos(angle), np.sin(angle)], dtype=float)
    ys = np.empty((samples, 4))
    ys[0] = y
    worst = 0.0
    for i in range(samples - 1):
        h = s[i + 1] - s[i]
        a = _frenet_field(k_nodes[i], y)
        b = _frenet_field(k_mid[i], y + h / 2 * a)
        c = _frenet_field(k_mid[i], y + h / 2 * b)
        d = _frenet_field(k_nodes[i + 1], y + h * c)
        y = y + h / 6 * (a + 2 * b + 2 * c + d)
        nrm = np.linalg.norm(y[2:])
        worst = max(worst, abs(nrm - 1.0))
        y[2:] /= nrm
        if not np.all(np.isfinite(y)):
            raise GeometryError(f"curve integration blew up at s = {s[i + 1]}")
        ys[i + 1] = y
    return PlaneCurve(s, ys[:, :2], ys[:, 2:], k, worst)


# ---------------------------------------------------------------------------
# composition with the cylinder over a plane curve

@dataclass
class CompositionPoint:
    height: float  # F_a
    xi_a: float  # <xi, a>
    grad_height_sq: float  # |grad F_a|^2
    H_F: float
    H_f: float
    k: float
    n: int

    @property
    def identity_terms(self) -> tuple[float, float]:
        """(n^2 H_f^2,  n^2 H_F^2 + k^2 (1 - <xi,a>^2)^2)."""
        lhs = self.n**2 * self.H_f**2
        rhs = self.n**2 * self.H_F**2 + self.k**2 * (1 - self.xi_a**2) ** 2
        return lhs, rhs

    @property
    def identity_residual(self) -> float:
        lhs, rhs = self.identity_terms
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)

    @property
    def gradient_residual(self) -> float:
        return abs(self.grad_height_sq + self.xi_a**2 - 1.0)


@dataclass
class CompositionData:
    """f = (gamma x id) o F, with the a-coordinate of F replaced by gamma(F_a)."""

    F: Chart
    curve: PlaneCurve
    axis: int
    chart: Chart

    @property
    def n(self) -> int:
        return self.F.intrinsic_dim

    def at(self, point) -> CompositionPoint:
        return self.evaluate(np.asarray(point, dtype=float)[:, None])[0]

    def evaluate(self, points) -> list[CompositionPoint]:
        """Identity data at each column of ``points`` (towers evaluated in one batch)."""
        pts = np.asarray(points, dtype=float)
        twF = evaluate_tower(self.F, pts, 2)
        twf = evaluate_tower(self.chart, pts, 2)
        heights = twF.position[..., self.axis]
        kvals = _kvalues(self.curve.curvature, heights)
        a = np.zeros(self.F.ambient.coords)
        a[self.axis] = 1.0
        out = []
        for i in range(pts.shape[1]):
            ffF = fundamental_forms(twF.at(i), self.F.ambient)
            ff = fundamental_forms(twf.at(i), self.chart.ambient)
            xi = ffF.normal_frame[0]
            tang = ffF.tangent_frame @ a
            out.append(CompositionPoint(float(heights[i]), float(xi @ a), float(tang @ tang),
                                        ffF.mean_curvature, ff.mean_curvature, float(kvals[i]), self.n))
        return out


def compose_with_curve_cylinder(F: Chart, curve: PlaneCurve, axis: int, check_points=None) -> CompositionData:
    """Compose a Euclidean hypersurface F with gamma x id along coordinate ``axis``."""
    if F.ambient.kind != "euclidean" or F.ambient.coords != F.intrinsic_dim + 1:
        raise GeometryError("F must be a hypersurface of Euclidean space")
    if not 0 <= axis < F.ambient.coords:
        raise ValueError(f"axis {axis} out of range")
    pts = _box_samples(F.domain) if check_points is None else np.asarray(check_points, dtype=float)
    heights = F(pts)[..., axis]
    lo, hi = curve.s_range
    if np.min(heights) < lo - 1e-12 or np.max(heights) > hi + 1e-12:
        raise DomainError(
            f"F_a ranges over [{np.min(heights):.4g}, {np.max(heights):.4g}], "
            f"outside the curve's arclength range [{lo:.4g}, {hi:.4g}]"
        )

    def ev(params):
        coords = F.evaluator(params)
        g = curve(coords[axis])
        rest = [c for i, c in enumerate(coords) if i != axis]
        return g + rest

    chart = Chart(F.intrinsic_dim, AmbientSpace.euclidean(F.ambient.coords + 1), tuple(F.domain), ev,
                  f"{F.label}@curve[a={axis}]", order_boost=F.order_boost)
    return CompositionData(F, curve, axis, chart)
