"""Charts of immersions into Euclidean space or the unit sphere, and their
pointwise extrinsic geometry."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from nullitylab import jets as J
from nullitylab.jets import Jet, JetBudget

SPHERE_NORM_TOL = 1e-10
SINGULAR_RATIO = 1e-8
NULLITY_REL_TOL = 1e-7


class GeometryError(Exception):
    """Base class for geometric evaluation failures."""


class DomainError(GeometryError):
    pass


class SingularPointError(GeometryError):
    def __init__(self, point, message="degenerate induced metric"):
        self.point = np.asarray(point, dtype=float)
        super().__init__(f"{message} at parameter point {self.point.tolist()}")


@dataclass(frozen=True)
class AmbientSpace:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("euclidean", "sphere"):
            raise ValueError(f"unknown ambient kind {self.kind!r}")

    @classmethod
    def euclidean(cls, m: int) -> "AmbientSpace":
        return cls("euclidean", m)

    @classmethod
    def sphere(cls, m: int) -> "AmbientSpace":
        return cls("sphere", m)

    @property
    def curvature(self) -> int:
        return 1 if self.kind == "sphere" else 0

    @property
    def coords(self) -> int:
        """Number of Euclidean coordinates used to represent points."""
        return self.dim + 1 if self.kind == "sphere" else self.dim


Evaluator = Callable[[list[Jet]], list[Jet]]


@dataclass(frozen=True)
class Chart:
    """A local parametrization ``domain -> ambient``.

    ``evaluator`` maps parameter jets to ambient-coordinate jets.  Charts whose
    evaluator differentiates its input internally declare ``order_boost``: the
    inputs are seeded that many orders higher than requested.
    """

    intrinsic_dim: int
    ambient: AmbientSpace
    domain: tuple[tuple[float, float], ...]
    evaluator: Evaluator
    label: str = ""
    order_boost: int = 0

    def contains(self, point, slack: float = 1e-12) -> bool:
        p = np.asarray(point, dtype=float)
        for i, (lo, hi) in enumerate(self.domain):
            if np.any(p[i] < lo - slack) or np.any(p[i] > hi + slack):
                return False
        return True

    def __call__(self, point) -> np.ndarray:
        """Ambient position(s); trailing axis is the ambient coordinate."""
        tower = evaluate_tower(self, point, 0)
        return tower.position


@dataclass
class DerivativeTower:
    point: np.ndarray
    order: int
    coords: list[Jet]

    @property
    def dims(self) -> int:
        return self.coords[0].dims

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coords[0].batch_shape

    @cached_property
    def partials(self) -> np.ndarray:
        """``d^a Phi`` as an array of shape (n_coeffs, *batch, ambient)."""
        return np.stack([c.partials() for c in self.coords], axis=-1)

    @property
    def position(self) -> np.ndarray:
        return self.partials[0]

    def at(self, i) -> "DerivativeTower":
        """The unbatched tower at batch position ``i``."""
        if not isinstance(i, tuple):
            i = (i,)
        pt = self.point[(slice(None),) + i]
        return DerivativeTower(pt, self.order, [c[i] for c in self.coords])

    def derivatives(self, s: int) -> tuple[list[tuple[int, ...]], np.ndarray]:
        """Multi-indices of total order ``s`` and the matching partials."""
        idx = J.multi_indices(self.dims, self.order)
        sel = [k for k, a in enumerate(idx) if sum(a) == s]
        return [idx[k] for k in sel], self.partials[sel]

    def directional(self, s: int, direction) -> np.ndarray:
        """s-th derivative of ``t -> Phi(p + t Z)`` at 0 (Z may be complex)."""
        if s > self.order:
            raise ValueError(f"tower of order {self.order} has no order-{s} data")
        z = np.asarray(direction)
        idx, d = self.derivatives(s)
        out = np.zeros(d.shape[1:], dtype=np.result_type(z.dtype, float))
        for a, vec in zip(idx, d):
            # multinomial count of orderings of the multi-index
            weight = np.prod([z[i] ** e for i, e in enumerate(a)])
            mult = _multinomial(a)
            out = out + mult * weight * vec
        return out

    @cached_property
    def jacobian(self) -> np.ndarray:
        """First partials, shape (n, ambient) for an unbatched tower."""
        n = self.dims
        return np.stack([self.partials[1 + i] for i in range(n)], axis=-2)

    @cached_property
    def hessian(self) -> np.ndarray:
        """Second partials ``Phi_ij``, shape (n, n, ambient)."""
        n = self.dims
        lay = J.multi_indices(self.dims, self.order)
        pos = {a: k for k, a in enumerate(lay)}
        amb = self.partials.shape[-1]
        h = np.empty((n, n) + self.batch_shape + (amb,))
        for i in range(n):
            for j in range(n):
                a = [0] * n
                a[i] += 1
                a[j] += 1
                h[i, j] = self.partials[pos[tuple(a)]]
        return h


def _multinomial(a) -> float:
    from math import factorial

    s = sum(a)
    out = factorial(s)
    for e in a:
        out //= factorial(e)
    return float(out)


def evaluate_tower(chart: Chart, point, order: int) -> DerivativeTower:
    """Taylor data of the chart map at ``point`` (shape (n,) or (n, *batch))."""
    point = np.asarray(point, dtype=float)
    if point.shape[0] != chart.intrinsic_dim:
        raise DomainError(
            f"point has {point.shape[0]} coordinates, chart {chart.label!r} "
            f"has dimension {chart.intrinsic_dim}"
        )
    if not chart.contains(point):
        raise DomainError(f"point outside the domain of chart {chart.label!r}")
    seeds = J.seed_variables(point, JetBudget(order + chart.order_boost, chart.intrinsic_dim))
    out = chart.evaluator(seeds)
    coords = [c.truncate(order) for c in out]
    if len(coords) != chart.ambient.coords:
        raise GeometryError(
            f"chart {chart.label!r} produced {len(coords)} coordinates, "
            f"expected {chart.ambient.coords}"
        )
    tower = DerivativeTower(point, order, coords)
    if chart.ambient.kind == "sphere":
        norm = np.linalg.norm(tower.position, axis=-1)
        if np.any(np.abs(norm - 1.0) > SPHERE_NORM_TOL):
            raise GeometryError(
                f"sphere chart {chart.label!r} left the unit sphere "
                f"(max |norm - 1| = {np.max(np.abs(norm - 1.0)):.3e})"
            )
    return tower


# ---------------------------------------------------------------------------
# frames

def _fix_sign(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > tol * max(1.0, np.abs(v).max()))
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def pivoted_gram_schmidt(vectors: np.ndarray, inner=None, pivot=None):
    """Orthonormalize rows of ``vectors`` choosing the largest residual first.

    Returns ``(frame, coeffs, order)`` with ``frame = coeffs @ vectors``.
    ``inner`` is an optional Gram matrix for a non-Euclidean inner product.
    A fixed ``pivot`` order can be supplied to reproduce a frame smoothly at
    nearby points.
    """
    k = vectors.shape[0]
    G = vectors @ vectors.T if inner is None else inner
    coeffs = np.zeros((0, k))
    remaining = list(range(k))
    order = []
    for step in range(k):
        best, best_norm, best_c = None, -1.0, None
        candidates = [pivot[step]] if pivot is not None else remaining
        for i in candidates:
            c = np.zeros(k)
            c[i] = 1.0
            if len(coeffs):
                c = c - coeffs.T @ (coeffs @ G[:, i])
            nrm2 = c @ G @ c
            if nrm2 > best_norm:
                best, best_norm, best_c = i, nrm2, c
        if best_norm <= 0:
            raise np.linalg.LinAlgError("linearly dependent vectors")
        coeffs = np.vstack([coeffs, best_c / np.sqrt(best_norm)])
        remaining.remove(best)
        order.append(best)
    frame = coeffs @ vectors if inner is None else None
    return frame, coeffs, order


def orthogonal_complement(span: np.ndarray, ambient_dim: int, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal rows spanning the complement of the row space of ``span``."""
    if span.size == 0:
        return np.eye(ambient_dim)
    u, s, vt = np.linalg.svd(span, full_matrices=True)
    rank = int(np.sum(s > tol * s[0]))
    comp = vt[rank:]
    return np.array([_fix_sign(v) for v in comp]).reshape(-1, ambient_dim)


# ---------------------------------------------------------------------------
# fundamental forms

@dataclass
class FundamentalForms:
    point: np.ndarray
    ambient: AmbientSpace
    position: np.ndarray
    jacobian: np.ndarray  # (n, M) coordinate tangent vectors
    hessian: np.ndarray  # (n, n, M)
    metric: np.ndarray  # (n, n)
    frame_coeffs: np.ndarray  # (n, n): e_a = sum_i frame_coeffs[a, i] d_i
    tangent_frame: np.ndarray  # (n, M)
    normal_frame: np.ndarray  # (q, M)
    sff: np.ndarray  # (n, n, M): alpha(e_a, e_b) as ambient vectors
    mean_curvature_vector: np.ndarray
    mean_curvature: float

    @property
    def n(self) -> int:
        return self.metric.shape[0]

    @property
    def normal_projector(self) -> np.ndarray:
        return self.normal_frame.T @ self.normal_frame

    @property
    def sff_components(self) -> np.ndarray:
        """alpha(e_a, e_b) expressed in the normal frame, shape (n, n, q)."""
        return self.sff @ self.normal_frame.T

    def alpha(self, X, Y) -> np.ndarray:
        """Second fundamental form on parameter-coordinate vectors."""
        X = np.asarray(X)
        Y = np.asarray(Y)
        proj = self.hessian @ self.normal_projector
        return np.einsum("i,j,ijm->m", X, Y, proj)

    def to_frame(self, X) -> np.ndarray:
        """Orthonormal-frame components of a parameter-coordinate vector."""
        return self.tangent_frame @ (np.asarray(X) @ self.jacobian)

    def from_frame(self, x) -> np.ndarray:
        """Parameter-coordinate vector with orthonormal-frame components ``x``."""
        return np.asarray(x) @ self.frame_coeffs

    @property
    def scale(self) -> float:
        """Largest sff vector norm: the natural curvature scale at the point."""
        return float(np.max(np.linalg.norm(self.sff, axis=-1)))


def fundamental_forms(tower: DerivativeTower, ambient: AmbientSpace) -> FundamentalForms:
    if tower.order < 2:
        raise ValueError("second fundamental form needs a tower of order >= 2")
    if tower.batch_shape:
        raise ValueError("fundamental_forms expects an unbatched tower; use tower.at(i)")
    jac = tower.jacobian
    hess = tower.hessian
    n, M = jac.shape
    G = jac @ jac.T
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= SINGULAR_RATIO * ev[-1]:
        raise SingularPointError(tower.point)

    _, coeffs, _ = pivoted_gram_schmidt(jac)
    tangent = coeffs @ jac
    for a in range(n):
        if _fix_sign(tangent[a]) is not tangent[a]:
            tangent[a] = -tangent[a]
            coeffs[a] = -coeffs[a]

    pos = tower.position
    span = tangent if ambient.kind == "euclidean" else np.vstack([tangent, pos])
    normal = orthogonal_complement(span, M)
    P = normal.T @ normal
    proj_hess = hess @ P
    sff = np.einsum("ai,bj,ijm->abm", coeffs, coeffs, proj_hess)
    sff = 0.5 * (sff + sff.transpose(1, 0, 2))
    hvec = np.trace(sff, axis1=0, axis2=1) / n
    return FundamentalForms(
        point=np.asarray(tower.point, dtype=float),
        ambient=ambient,
        position=pos,
        jacobian=jac,
        hessian=hess,
        metric=G,
        frame_coeffs=coeffs,
        tangent_frame=tangent,
        normal_frame=normal,
        sff=sff,
        mean_curvature_vector=hvec,
        mean_curvature=float(np.linalg.norm(hvec)),
    )


def shape_operator(ff: FundamentalForms, xi) -> np.ndarray:
    """Matrix of A_xi in the orthonormal tangent frame."""
    xi = np.asarray(xi, dtype=float)
    resid = np.linalg.norm(xi - ff.normal_projector @ xi)
    if resid > 1e-8:
        raise GeometryError(f"direction is not normal (projection residual {resid:.2e})")
    if abs(np.linalg.norm(xi) - 1.0) > 1e-8:
        raise GeometryError("normal direction must have unit length")
    A = ff.sff @ xi
    return 0.5 * (A + A.T)


@dataclass
class NullityData:
    index: int
    basis: np.ndarray  # (nu, M) ambient unit tangent vectors
    basis_params: np.ndarray  # (nu, n) the same vectors in parameter coordinates
    singular_values: np.ndarray
    tolerance: float

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0]) if len(self.singular_values) else 0.0


def relative_nullity(ff: FundamentalForms, rel_tol: float = NULLITY_REL_TOL) -> NullityData:
    """Kernel of the second fundamental form, by SVD of the flattened operator."""
    n = ff.n
    comps = ff.sff_components  # (a, b, k) = <alpha(e_a, e_b), xi_k>
    # operator X -> (alpha(X, e_b))_b: rows indexed by (b, k), columns by a
    L = comps.transpose(1, 2, 0).reshape(-1, n)
    if L.shape[0] == 0:
        s = np.zeros(n)
        vt = np.eye(n)
    else:
        _, s, vt = np.linalg.svd(L, full_matrices=True)
        s = np.concatenate([s, np.zeros(n - len(s))])
    smax = s[0] if len(s) else 0.0
    if smax == 0.0:
        null = np.arange(n)
    else:
        null = np.flatnonzero(s < rel_tol * smax)
    vecs = vt[null]
    basis = np.array([_fix_sign(v @ ff.tangent_frame) for v in vecs]).reshape(-1, ff.tangent_frame.shape[1])
    params = np.array([ff.from_frame(ff.tangent_frame @ b) for b in basis]).reshape(-1, n)
    return NullityData(len(null), basis, params, s, rel_tol)


def membership_residual(ff: FundamentalForms, X) -> float:
    """max_j |alpha(T, e_j)| / sigma_max for the unit vector T along X."""
    t = ff.to_frame(X)
    t = t / np.linalg.norm(t)
    vals = np.einsum("a,abm->bm", t, ff.sff)
    nd = relative_nullity(ff)
    if nd.sigma_max == 0.0:
        return 0.0
    return float(np.max(np.linalg.norm(vals, axis=-1)) / nd.sigma_max)


# ---------------------------------------------------------------------------
# intrinsic geometry

def metric_derivatives(tower: DerivativeTower) -> np.ndarray:
    """``dG[k, i, j] = d_k g_ij`` from first and second partials."""
    jac, hess = tower.jacobian, tower.hessian
    # d_k <Phi_i, Phi_j> = <Phi_ik, Phi_j> + <Phi_i, Phi_jk>
    t = np.einsum("ikm,jm->kij", hess, jac)
    return t + t.transpose(0, 2, 1)


def christoffel(tower: DerivativeTower) -> np.ndarray:
    """``Gamma[k, i, j]`` of the induced metric, from the coordinate formula."""
    if tower.order < 2:
        raise ValueError("Christoffel symbols need a tower of order >= 2")
    jac = tower.jacobian
    G = jac @ jac.T
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= SINGULAR_RATIO * ev[-1]:
        raise SingularPointError(tower.point)
    dG = metric_derivatives(tower)
    # first kind: [ij, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    first = 0.5 * (
        dG.transpose(0, 1, 2)[:, :, :]  # d_i g_jl  indexed [i, j, l]
        + dG.transpose(1, 0, 2)  # d_j g_il -> [i, j, l]
        - dG.transpose(1, 2, 0)  # d_l g_ij -> [i, j, l]
    )
    Ginv = np.linalg.inv(G)
    return np.einsum("kl,ijl->kij", Ginv, first)


def _metric_jets(tower: DerivativeTower) -> list[list[Jet]]:
    n = tower.dims
    d = [[c.derivative(i) for c in tower.coords] for i in range(n)]
    return [[sum((a * b for a, b in zip(d[i], d[j])), start=0.0 * d[0][0]) for j in range(n)] for i in range(n)]


def _inverse_jets(G: list[list[Jet]]) -> list[list[Jet]]:
    n = len(G)
    if n == 1:
        return [[1.0 / G[0][0]]]
    if n == 2:
        det = G[0][0] * G[1][1] - G[0][1] * G[1][0]
        inv = 1.0 / det
        return [[G[1][1] * inv, -G[0][1] * inv], [-G[1][0] * inv, G[0][0] * inv]]
    if n == 3:
        cof = [[None] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                r = [x for x in range(3) if x != i]
                c = [y for y in range(3) if y != j]
                minor = G[r[0]][c[0]] * G[r[1]][c[1]] - G[r[0]][c[1]] * G[r[1]][c[0]]
                cof[i][j] = minor if (i + j) % 2 == 0 else -minor
        det = G[0][0] * cof[0][0] + G[0][1] * cof[0][1] + G[0][2] * cof[0][2]
        inv = 1.0 / det
        return [[cof[j][i] * inv for j in range(3)] for i in range(3)]
    raise ValueError("metric inversion implemented for n <= 3")


def christoffel_jets(tower: DerivativeTower) -> list[list[list[Jet]]]:
    """Christoffel symbols as jets of order ``tower.order - 2``."""
    n = tower.dims
    G = _metric_jets(tower)
    Ginv = [[g.truncate(tower.order - 2) for g in row] for row in _inverse_jets(G)]
    dG = [[[G[i][j].derivative(k) for j in range(n)] for i in range(n)] for k in range(n)]
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                acc = None
                for l in range(n):
                    first = (dG[i][j][l] + dG[j][i][l] - dG[l][i][j]) * 0.5
                    term = Ginv[k][l] * first
                    acc = term if acc is None else acc + term
                out[k][i][j] = out[k][j][i] = acc
    return out


def riemann_tensor(tower: DerivativeTower) -> np.ndarray:
    """``R[l, i, j, k]`` with R(d_j, d_k) d_i = R^l_ijk d_l (needs order >= 3)."""
    if tower.order < 3:
        raise ValueError("curvature needs a tower of order >= 3")
    n = tower.dims
    Gam = christoffel_jets(tower)
    g = np.array([[[Gam[k][i][j].value for j in range(n)] for i in range(n)] for k in range(n)])
    dg = np.array(
        [[[[Gam[k][i][j].derivative(m).value for m in range(n)] for j in range(n)] for i in range(n)] for k in range(n)]
    )  # dg[l, i, j, m] = d_m Gamma^l_ij
    R = (
        np.einsum("likj->lijk", dg)
        - np.einsum("lijk->lijk", dg)
        + np.einsum("ljm,mik->lijk", g, g)
        - np.einsum("lkm,mij->lijk", g, g)
    )
    return R


def sectional_curvature(tower: DerivativeTower, X=None, Y=None) -> float:
    """Intrinsic sectional curvature of the plane spanned by X, Y."""
    n = tower.dims
    X = np.eye(n)[0] if X is None else np.asarray(X, dtype=float)
    Y = np.eye(n)[1] if Y is None else np.asarray(Y, dtype=float)
    R = riemann_tensor(tower)
    jac = tower.jacobian
    G = jac @ jac.T
    Rlow = np.einsum("pl,lijk->pijk", G, R)  # R_pijk = <R(d_j,d_k) d_i, d_p>
    # K = <R(X,Y)Y, X> / (|X|^2 |Y|^2 - <X,Y>^2)
    num = np.einsum("pijk,p,i,j,k->", Rlow, X, Y, X, Y)
    den = (X @ G @ X) * (Y @ G @ Y) - (X @ G @ Y) ** 2
    return float(num / den)


def extrinsic_sectional(ff: FundamentalForms, X, Y) -> float:
    """Sectional curvature predicted by the Gauss equation."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    G = ff.metric
    num = ff.alpha(X, X) @ ff.alpha(Y, Y) - ff.alpha(X, Y) @ ff.alpha(X, Y)
    den = (X @ G @ X) * (Y @ G @ Y) - (X @ G @ Y) ** 2
    return float(ff.ambient.curvature + num / den)


# ---------------------------------------------------------------------------
# convenience

def geometry_at(chart: Chart, point, order: int = 2) -> FundamentalForms:
    return fundamental_forms(evaluate_tower(chart, point, order), chart.ambient)


def reparametrize(chart: Chart, diffeo: Callable[[list[Jet]], list[Jet]], domain, label=None) -> Chart:
    """Precompose a chart with a parameter diffeomorphism given on jets."""

    def ev(params):
        return chart.evaluator(diffeo(params))

    return Chart(chart.intrinsic_dim, chart.ambient, tuple(domain), ev,
                 label or f"{chart.label}∘diffeo", chart.order_boost)


# stock charts used by tests and scenarios ------------------------------------

def plane_chart(extent: float = 2.0) -> Chart:
    def ev(p):
        u, v = p
        return [u, v, 0.0 * u]

    return Chart(2, AmbientSpace.euclidean(3), ((-extent, extent),) * 2, ev, "plane")


def unit_sphere_chart() -> Chart:
    """Latitude/longitude chart of the round S^2 in R^3."""

    def ev(p):
        lat, lon = p
        cl = J.cos(lat)
        return [cl * J.cos(lon), cl * J.sin(lon), J.sin(lat)]

    return Chart(2, AmbientSpace.euclidean(3), ((-1.3, 1.3), (-np.pi, np.pi)), ev, "round-sphere")


def circular_cylinder_chart(radius: float = 1.0) -> Chart:
    def ev(p):
        t, s = p
        return [radius * J.cos(t), radius * J.sin(t), s]

    return Chart(2, AmbientSpace.euclidean(3), ((-np.pi, np.pi), (-5.0, 5.0)), ev, f"cylinder-r{radius}")


def graph_chart(height: Callable[[Jet, Jet], Jet], extent: float = 1.0, label="graph") -> Chart:
    def ev(p):
        u, v = p
        return [u, v, height(u, v)]

    return Chart(2, AmbientSpace.euclidean(3), ((-extent, extent),) * 2, ev, label)


def catenoid_chart() -> Chart:
    def ev(p):
        u, v = p
        ch = J.cosh(u)
        return [ch * J.cos(v), ch * J.sin(v), u]

    return Chart(2, AmbientSpace.euclidean(3), ((-1.5, 1.5), (-np.pi, np.pi)), ev, "catenoid")


def polar_plane_chart() -> Chart:
    def ev(p):
        r, t = p
        return [r * J.cos(t), r * J.sin(t)]

    return Chart(2, AmbientSpace.euclidean(2), ((0.1, 5.0), (-np.pi, np.pi)), ev, "polar-plane")
