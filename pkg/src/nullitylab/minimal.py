"""Minimal surfaces from Weierstrass data, their associated families and
orthogonal sums, and rotational (Delaunay) profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from nullitylab import jets as J
from nullitylab.immersion import AmbientSpace, Chart, DomainError, GeometryError
from nullitylab.jets import Jet

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class HolomorphicSeries:
    """Truncated power series ``sum c_m (z - base)^m``.

    ``exact`` marks polynomials, whose truncation error is zero.
    """

    coefficients: np.ndarray
    base: complex = 0.0
    exact: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=complex))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @classmethod
    def polynomial(cls, coeffs, base: complex = 0.0) -> "HolomorphicSeries":
        return cls(np.asarray(coeffs, dtype=complex), base, exact=True)

    @classmethod
    def exponential(cls, rate: complex = 1.0, degree: int = 40, base: complex = 0.0) -> "HolomorphicSeries":
        """Series of ``exp(rate * z)`` about ``base``."""
        scale = np.exp(rate * base)
        c = np.array([scale * rate**m / math.factorial(m) for m in range(degree + 1)], dtype=complex)
        return cls(c, base)

    def tail_bound(self, r: float) -> float:
        """Heuristic bound on the discarded tail at distance ``r``."""
        if self.exact:
            return 0.0
        c = np.abs(self.coefficients)
        top = self.degree
        last = c[max(0, top - 2):]
        # geometric continuation from the last coefficients
        est = float(np.max(last * r ** np.arange(top - len(last) + 1, top + 1)))
        ratio = 0.0
        nz = c[c > 0]
        if len(nz) >= 2 and c[top] > 0 and c[top - 1] > 0:
            ratio = min(r * c[top] / c[top - 1], 0.99)
        return est * (1.0 + 1.0 / (1.0 - ratio))

    @property
    def radius(self) -> float:
        """Largest distance from ``base`` where the tail bound stays below tolerance."""
        if self.exact:
            return math.inf
        lo, hi = 0.0, 1.0
        while self.tail_bound(hi) < TAIL_TOL and hi < 1e6:
            lo, hi = hi, 2 * hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.tail_bound(mid) < TAIL_TOL:
                lo = mid
            else:
                hi = mid
        return lo

    def __add__(self, other: "HolomorphicSeries") -> "HolomorphicSeries":
        n = max(len(self.coefficients), len(other.coefficients))
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[: len(self.coefficients)] = self.coefficients
        b[: len(other.coefficients)] = other.coefficients
        return HolomorphicSeries(a + b, self.base, self.exact and other.exact)

    def scale(self, s: complex) -> "HolomorphicSeries":
        return HolomorphicSeries(self.coefficients * s, self.base, self.exact)

    def __mul__(self, other):
        if not isinstance(other, HolomorphicSeries):
            return self.scale(other)
        if self.base != other.base:
            raise ValueError("series about different base points")
        full = np.convolve(self.coefficients, other.coefficients)
        if self.exact and other.exact:
            return HolomorphicSeries(full, self.base, True)
        # products of truncated series are exact only up to the smaller degree
        keep = min(self.degree if not self.exact else full.size, other.degree if not other.exact else full.size)
        return HolomorphicSeries(full[: keep + 1], self.base, False)

    __rmul__ = __mul__

    def integrate(self) -> "HolomorphicSeries":
        c = np.zeros(len(self.coefficients) + 1, complex)
        c[1:] = self.coefficients / np.arange(1, len(self.coefficients) + 1)
        return HolomorphicSeries(c, self.base, self.exact)

    def derivative(self) -> "HolomorphicSeries":
        c = self.coefficients[1:] * np.arange(1, len(self.coefficients))
        if len(c) == 0:
            c = np.zeros(1, complex)
        return HolomorphicSeries(c, self.base, self.exact)

    def __call__(self, z):
        """Evaluate at complex numbers or at a complex jet."""
        w = z - self.base
        acc = self.coefficients[-1]
        if isinstance(w, Jet):
            acc = Jet.constant(np.full(w.batch_shape, acc, dtype=complex), w.dims, w.order)
        for c in self.coefficients[-2::-1]:
            acc = acc * w + c
        return acc


@dataclass(frozen=True)
class WeierstrassData:
    """Holomorphic data (f, g) on a parameter box: height factor f, Gauss map g."""

    f: HolomorphicSeries
    g: HolomorphicSeries
    domain: tuple[tuple[float, float], tuple[float, float]]
    label: str = "weierstrass"

    def conformal_factor(self, z):
        return np.abs(self.f(z)) * (1 + np.abs(self.g(z)) ** 2) / 2

    def principal_curvature(self, z):
        """k >= 0 with Gaussian curvature -k^2."""
        gp = self.g.derivative()
        return 4 * np.abs(gp(z)) / (np.abs(self.f(z)) * (1 + np.abs(self.g(z)) ** 2) ** 2)

    def gauss_map(self, z):
        g = self.g(z)
        d = 1 + np.abs(g) ** 2
        return np.stack([2 * g.real / d, 2 * g.imag / d, (np.abs(g) ** 2 - 1) / d], axis=-1)

    def integrand(self) -> list[HolomorphicSeries]:
        one = HolomorphicSeries.polynomial([1.0], self.g.base)
        g2 = self.g * self.g
        return [
            ((one + g2.scale(-1)) * self.f).scale(0.5),
            ((one + g2) * self.f).scale(0.5j),
            self.g * self.f,
        ]

    def primitive(self) -> list[HolomorphicSeries]:
        return [s.integrate() for s in self.integrand()]

    def sample_points(self, n: int = 9) -> np.ndarray:
        (u0, u1), (v0, v1) = self.domain
        u, v = np.meshgrid(np.linspace(u0, u1, n), np.linspace(v0, v1, n), indexing="ij")
        return (u + 1j * v).ravel()

    def validate(self):
        z = self.sample_points()
        base = self.f.base
        r = float(np.max(np.abs(z - base)))
        for s in self.primitive():
            if r >= s.radius:
                raise DomainError(
                    f"{self.label}: domain reaches |z - base| = {r:.3f} beyond series "
                    f"validity radius {s.radius:.3f}"
                )
        lam = self.conformal_factor(z)
        if np.any(lam <= 1e-12):
            raise GeometryError(f"{self.label}: branch point (conformal factor vanishes) in domain")


@dataclass(frozen=True)
class MinimalSurfaceChart:
    chart: Chart
    data: WeierstrassData
    theta: float

    def gauss_map(self, point) -> np.ndarray:
        u, v = point
        return self.data.gauss_map(np.asarray(u + 1j * v))

    def principal_curvature(self, point) -> float:
        u, v = point
        return self.data.principal_curvature(np.asarray(u + 1j * v))

    def conformal_factor(self, point) -> float:
        u, v = point
        return self.data.conformal_factor(np.asarray(u + 1j * v))


def _complex_coordinate(params) -> Jet:
    u, v = params[0], params[1]
    return u + v * 1j


def weierstrass_chart(data: WeierstrassData, theta: float = 0.0) -> MinimalSurfaceChart:
    """Member ``theta`` of the associated family, Re[e^{-i theta} int phi dz]."""
    data.validate()
    prim = data.primitive()
    rot = np.exp(-1j * theta)

    def ev(params):
        z = _complex_coordinate(params)
        return [(s(z) * rot).real for s in prim]

    chart = Chart(2, AmbientSpace.euclidean(3), tuple(data.domain), ev, f"{data.label}[theta={theta:.4f}]")
    return MinimalSurfaceChart(chart, data, theta)


def orthogonal_sum_hat(data: WeierstrassData, theta: float, phi: float) -> Chart:
    """cos(phi) g_theta  +  sin(phi) g_{theta + pi/2} in R^3 (+) R^3."""
    if not 0.0 < phi < np.pi / 2:
        raise ValueError(f"phi must lie in (0, pi/2), got {phi}")
    data.validate()
    k = data.principal_curvature(data.sample_points())
    if np.any(k <= 1e-10):
        raise GeometryError(f"{data.label}: flat point (k = 0) in domain; Gaussian curvature must be negative")
    prim = data.primitive()
    rot = np.exp(-1j * theta)
    c, s = np.cos(phi), np.sin(phi)

    def ev(params):
        z = _complex_coordinate(params)
        w = [p(z) * rot for p in prim]
        # g_{theta + pi/2} = Re[-i e^{-i theta} Phi] = Im[e^{-i theta} Phi]
        return [wi.real * c for wi in w] + [wi.imag * s for wi in w]

    return Chart(2, AmbientSpace.euclidean(6), tuple(data.domain), ev, f"{data.label}-hat[theta={theta:.4f},phi={phi:.4f}]")


# stock data -------------------------------------------------------------------

def enneper_data(extent: float = 0.8) -> WeierstrassData:
    return WeierstrassData(
        HolomorphicSeries.polynomial([1.0]),
        HolomorphicSeries.polynomial([0.0, 1.0]),
        ((-extent, extent), (-extent, extent)),
        "enneper",
    )


def catenoid_data(extent: float = 1.0, degree: int = 40) -> WeierstrassData:
    """f = e^{-z}, g = e^{z}: the catenoid (-cosh u cos v, -cosh u sin v, u)."""
    return WeierstrassData(
        HolomorphicSeries.exponential(-1.0, degree),
        HolomorphicSeries.exponential(1.0, degree),
        ((-extent, extent), (-extent, extent)),
        "catenoid",
    )


STOCK_DATA: dict[str, Callable[[], WeierstrassData]] = {
    "enneper": enneper_data,
    "catenoid": catenoid_data,
}


# rotational surfaces ----------------------------------------------------------

def rotational_surface(profile: Callable[[Jet], Jet], domain, layout: str = "graph", label: str = "rotational") -> Chart:
    """Surface of revolution with parameters (x, theta).

    ``layout="graph"``: (x cos theta, x sin theta, phi(x)), axis e3.
    ``layout="axial"``: (x, phi(x) cos theta, phi(x) sin theta), axis e1, radius phi.
    """
    (x0, x1), _ = domain
    if layout == "graph" and x0 <= 0:
        raise DomainError("graph-layout rotational surfaces need x > 0 on the domain")
    if layout not in ("graph", "axial"):
        raise ValueError(f"unknown layout {layout!r}")

    def ev(params):
        x, t = params
        p = profile(x)
        if layout == "graph":
            return [x * J.cos(t), x * J.sin(t), p]
        return [x, p * J.cos(t), p * J.sin(t)]

    return Chart(2, AmbientSpace.euclidean(3), tuple(map(tuple, domain)), ev, f"{label}[{layout}]")


@dataclass
class DelaunayProfile:
    """Solution of  phi phi'' - 1 - phi'^2 = sign * phi sqrt((1+phi'^2)(n^2 H^2 (1+phi'^2)^2 - k^2))
    with k = c0 (1 + phi'^2).

    Samples come from an adaptive RK4 integration; jet evaluation re-expands
    the ODE in Taylor series about each requested point.
    """

    H: float
    c0: float
    n: int
    sign: int
    x: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    clamp_events: list = field(default_factory=list)

    def curvature_k(self, dphi):
        return self.c0 * (1 + dphi * dphi)

    def rhs(self, phi, dphi, record: bool = False):
        """phi'' from the ODE (works on floats and jets)."""
        q = 1 + dphi * dphi
        k = self.curvature_k(dphi)
        arg = q * (self.n**2 * self.H**2 * q * q - k * k)
        arg0 = arg.value if isinstance(arg, Jet) else np.asarray(arg)
        if np.any(arg0 < -1e-12):
            raise GeometryError(
                f"square-root argument {np.min(arg0):.3e} < 0: parameters (H={self.H}, c0={self.c0}, n={self.n}) inconsistent"
            )
        if np.any(arg0 < 0):
            if record:
                self.clamp_events.append(float(np.min(arg0)))
            if isinstance(arg, Jet):
                arg = arg + np.maximum(-arg0, 0)
            else:
                arg = np.maximum(arg, 0.0)
        root = J.sqrt(arg) if isinstance(arg, Jet) else np.sqrt(arg)
        return (q + self.sign * phi * root) / phi

    def _state(self, x0):
        """(phi, phi') at arbitrary x0 by RK4 from the nearest sample."""
        x0 = np.asarray(x0, dtype=float)
        if np.any(x0 < self.x[0] - 1e-12) or np.any(x0 > self.x[-1] + 1e-12):
            raise DomainError("profile evaluated outside its integration range")
        i = np.clip(np.searchsorted(self.x, x0), 0, len(self.x) - 1)
        j = np.where(
            (i > 0) & (np.abs(self.x[np.maximum(i - 1, 0)] - x0) < np.abs(self.x[i] - x0)), i - 1, i
        )
        xs, y = self.x[j], np.stack([self.phi[j], self.dphi[j]])
        if np.all(x0 == xs):
            return y[0], y[1]
        # at most half a sample spacing: two steps keep the local error far below rounding
        steps = 2
        h = (x0 - xs) / steps
        for _ in range(steps):
            y = _rk4_step(lambda yy: np.stack([yy[1], self.rhs(yy[0], yy[1])]), y, h)
        return y[0], y[1]

    def taylor(self, x0, order: int) -> np.ndarray:
        """Univariate Taylor coefficients of phi about x0 (shape (order+1, *batch))."""
        p0, p1 = self._state(x0)
        p0 = np.asarray(p0)
        c = np.zeros((order + 1,) + p0.shape)
        c[0] = p0
        if order >= 1:
            c[1] = p1
        # each pass fixes one more coefficient through phi'' = rhs(phi, phi')
        for m in range(2, order + 1):
            phi = Jet(1, m - 2, c[: m - 1].copy())
            dphi = Jet(1, m - 2, (c[1:m] * np.arange(1, m).reshape((-1,) + (1,) * p0.ndim)))
            dd = self.rhs(phi, dphi)
            c[m] = dd.coeffs[m - 2] / (m * (m - 1))
        return c

    def __call__(self, x: Jet) -> Jet:
        c = self.taylor(x.value, x.order)
        return J.compose_series(x, list(c))

    def slope(self, x: Jet) -> Jet:
        c = self.taylor(x.value, x.order + 1)
        d = c[1:] * np.arange(1, x.order + 2).reshape((-1,) + (1,) * (c.ndim - 1))
        return J.compose_series(x, list(d))

    def curvature_function(self) -> Callable[[Jet], Jet]:
        """The plane-curve curvature s -> c0 (1 + phi'(s)^2) as a jet map."""

        def k(s: Jet) -> Jet:
            d = self.slope(s)
            return (d * d + 1.0) * self.c0

        return k

    def ode_residual(self) -> float:
        """Max |phi phi'' - 1 - phi'^2 - sign phi sqrt(...)| with phi'' by
        fourth-order differences of the sampled slope."""
        h = self.x[1] - self.x[0]
        d = self.dphi
        dd = (-d[4:] + 8 * d[3:-1] - 8 * d[1:-3] + d[:-4]) / (12 * h)
        p, q = self.phi[2:-2], d[2:-2]
        expected = self.rhs(p, q)
        return float(np.max(np.abs(p * (dd - expected))))

    def samples_csv_rows(self):
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.x, self.phi, self.dphi)]


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_adaptive(f, y0, x_out, tol: float = 1e-12, h0: float = 1e-2, blowup: float = 1e6):
    """RK4 with step doubling, landing exactly on every output abscissa."""
    y = np.asarray(y0, dtype=float)
    out = [y.copy()]
    h = h0
    for a, b in zip(x_out[:-1], x_out[1:]):
        x = a
        while x < b - 1e-15:
            h = min(h, b - x)
            full = _rk4_step(f, y, h)
            half = _rk4_step(f, _rk4_step(f, y, h / 2), h / 2)
            err = np.max(np.abs(half - full)) / 15
            if err <= tol or h < 1e-10:
                y = half + (half - full) / 15
                x += h
                if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > blowup:
                    raise GeometryError(f"solution blew up near x = {x:.6g}")
                h *= min(2.0, 0.9 * (tol / max(err, 1e-300)) ** 0.2)
            else:
                h *= max(0.1, 0.9 * (tol / err) ** 0.25)
        out.append(y.copy())
    return np.array(out)


def delaunay_profile(H: float, c0: float, x_range, n: int = 3, phi0: float = 2.5, dphi0: float = 0.0,
                     sign: int = 1, samples: int = 4001, theta_range=(-np.pi, np.pi),
                     layout: str = "axial") -> tuple[DelaunayProfile, Chart]:
    """Integrate the profile ODE from x_range[0] and return it with its rotational chart."""
    if H <= 0:
        raise ValueError("H must be positive")
    # relative margin: n H itself may round above an exactly representable c0
    if not 0 < abs(c0) < n * H * (1 - 1e-12):
        raise ValueError(f"need 0 < |c0| < n H = {n * H}, got c0 = {c0}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    x = np.linspace(x_range[0], x_range[1], samples)
    prof = DelaunayProfile(H, c0, n, sign, x, np.empty(0), np.empty(0))

    def f(y):
        return np.array([y[1], prof.rhs(y[0], y[1], record=True)])

    ys = integrate_adaptive(f, [phi0, dphi0], x)
    prof.phi, prof.dphi = ys[:, 0], ys[:, 1]
    if np.any(prof.phi <= 0):
        raise GeometryError("profile radius reached zero")
    chart = rotational_surface(prof, ((x[0], x[-1]), theta_range), layout=layout, label="delaunay")
    return prof, chart
