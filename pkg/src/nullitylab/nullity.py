"""Distributions inside the relative nullity: splitting tensor and residuals of
its structural identities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from nullitylab import jets as J
from nullitylab.immersion import (
    Chart,
    DerivativeTower,
    FundamentalForms,
    GeometryError,
    christoffel,
    evaluate_tower,
    fundamental_forms,
    pivoted_gram_schmidt,
    relative_nullity,
)
from nullitylab.jets import Jet, JetBudget

FieldMap = Callable[[list[Jet]], list[list[Jet]]]

HYPOTHESIS_TOL = 1e-6
FD_STEP = 1e-3


class HypothesisError(GeometryError):
    """A precondition of an identity check does not hold at the point."""


@dataclass(frozen=True)
class Distribution:
    """Rank-k distribution spanned by parameter-coordinate vector fields.

    ``fields`` maps parameter jets to k fields, each a list of n component jets.
    """

    rank: int
    fields: FieldMap
    label: str = "D"

    @classmethod
    def coordinate(cls, n: int, axes: Sequence[int], label: str | None = None) -> "Distribution":
        axes = list(axes)

        def fields(params):
            zero = params[0] * 0.0
            return [[zero + (1.0 if i == a else 0.0) for i in range(n)] for a in axes]

        return cls(len(axes), fields, label or f"span(d_{axes})")

    def evaluate(self, point, order: int = 1):
        """Field values (k, n) and first partials (k, n, n) [field, component, var]."""
        point = np.asarray(point, dtype=float)
        n = point.shape[0]
        seeds = J.seed_variables(point, JetBudget(order, n))
        flds = self.fields(seeds)
        if len(flds) != self.rank:
            raise ValueError(f"distribution {self.label} returned {len(flds)} fields, rank is {self.rank}")
        vals = np.array([[c.value for c in f] for f in flds])
        grads = np.array([[[c.derivative(j).value for j in range(n)] for c in f] for f in flds])
        return vals, grads


@dataclass
class LocalFrame:
    """Metric data and a D-adapted orthonormal frame at one parameter point."""

    point: np.ndarray
    metric: np.ndarray
    gamma: np.ndarray  # Gamma[k, i, j]
    fields: np.ndarray  # (k, n)
    field_grads: np.ndarray  # (k, n, n)
    horizontal: np.ndarray  # (n-k, n) orthonormal basis of D^perp (parameter coords)
    pivot: list

    def inner(self, X, Y) -> float:
        return float(np.asarray(X) @ self.metric @ np.asarray(Y))

    def covariant(self, X, field_index: int) -> np.ndarray:
        """nabla_X T for the field T = fields[field_index]."""
        X = np.asarray(X)
        T = self.fields[field_index]
        dT = self.field_grads[field_index] @ X
        return dT + np.einsum("kij,i,j->k", self.gamma, X, T)

    def horizontal_part(self, V) -> np.ndarray:
        """Components of V along the orthonormal D^perp basis."""
        return self.horizontal @ self.metric @ np.asarray(V)

    def vertical_coeffs(self, V) -> np.ndarray:
        """Coefficients of the D-component of V in the (non-orthonormal) field basis."""
        F = self.fields
        gram = F @ self.metric @ F.T
        return np.linalg.solve(gram, F @ self.metric @ np.asarray(V))


def local_frame(tower: DerivativeTower, D: Distribution, pivot=None) -> LocalFrame:
    if tower.batch_shape:
        raise ValueError("local_frame expects an unbatched tower")
    G = tower.jacobian @ tower.jacobian.T
    gamma = christoffel(tower)
    vals, grads = D.evaluate(tower.point)
    n = G.shape[0]
    k = D.rank
    # orthonormalize D first, then complete with coordinate vectors
    basis = np.vstack([vals, np.eye(n)])
    gram = basis @ G @ basis.T
    if pivot is None:
        _, cD, _ = pivoted_gram_schmidt(vals, inner=vals @ G @ vals.T, pivot=list(range(k)))
        # greedy choice of completing coordinate directions
        chosen = []
        coeffs = np.hstack([cD, np.zeros((k, n))])
        for _ in range(n - k):
            best, best_c, best_n = None, None, -1.0
            for i in range(n):
                if i in chosen:
                    continue
                c = np.zeros(k + n)
                c[k + i] = 1.0
                c = c - coeffs.T @ (coeffs @ gram @ c)
                nrm = c @ gram @ c
                if nrm > best_n:
                    best, best_c, best_n = i, c, nrm
            chosen.append(best)
            coeffs = np.vstack([coeffs, best_c / np.sqrt(best_n)])
        pivot = chosen
    else:
        _, cD, _ = pivoted_gram_schmidt(vals, inner=vals @ G @ vals.T, pivot=list(range(k)))
        coeffs = np.hstack([cD, np.zeros((k, n))])
        for i in pivot:
            c = np.zeros(k + n)
            c[k + i] = 1.0
            c = c - coeffs.T @ (coeffs @ gram @ c)
            nrm = c @ gram @ c
            if nrm <= 0:
                raise HypothesisError("distribution not pointwise independent")
            coeffs = np.vstack([coeffs, c / np.sqrt(nrm)])
    frame = coeffs @ basis
    if np.linalg.matrix_rank(vals @ G @ vals.T, tol=1e-12) < k:
        raise HypothesisError(f"distribution {D.label} is not pointwise independent")
    return LocalFrame(np.asarray(tower.point, float), G, gamma, vals, grads, frame[k:], list(pivot))


@dataclass
class SplittingTensorData:
    point: np.ndarray
    matrices: np.ndarray  # (k, n-k, n-k): C_T[e, b] = <C_T X_b, X_e>
    basis: np.ndarray  # (n-k, n) orthonormal D^perp basis in parameter coordinates

    def __getitem__(self, i) -> np.ndarray:
        return self.matrices[i]


def splitting_from_frame(lf: LocalFrame) -> SplittingTensorData:
    k = lf.fields.shape[0]
    m = lf.horizontal.shape[0]
    mats = np.empty((k, m, m))
    for a in range(k):
        for b in range(m):
            nab = lf.covariant(lf.horizontal[b], a)
            mats[a, :, b] = -lf.horizontal_part(nab)
    return SplittingTensorData(lf.point, mats, lf.horizontal)


def splitting_tensor(chart: Chart, point, D: Distribution) -> SplittingTensorData:
    tower = evaluate_tower(chart, point, 2)
    return splitting_from_frame(local_frame(tower, D))


@dataclass
class IdentityResidualReport:
    name: str
    residual: float
    tolerance: float
    point: np.ndarray
    passed: bool = field(init=False)

    def __post_init__(self):
        self.residual = float(self.residual)
        self.passed = bool(self.residual < self.tolerance)


def totally_geodesic_residual(lf: LocalFrame) -> float:
    worst = 0.0
    k = lf.fields.shape[0]
    for a in range(k):
        for b in range(k):
            V = lf.covariant(lf.fields[a], b)  # nabla_{T_a} T_b
            h = np.linalg.norm(lf.horizontal_part(V))
            full = np.sqrt(max(lf.inner(V, V), 0.0))
            worst = max(worst, h / (1.0 + full))
    return worst


def check_totally_geodesic(chart: Chart, point, D: Distribution, tol: float = 1e-6) -> IdentityResidualReport:
    tower = evaluate_tower(chart, point, 2)
    lf = local_frame(tower, D)
    return IdentityResidualReport(f"totally-geodesic[{D.label}]", totally_geodesic_residual(lf), tol, lf.point)


def nullity_membership(ff: FundamentalForms, lf: LocalFrame) -> float:
    """max over fields T and frame e_j of |alpha(T/|T|, e_j)| / sigma_max(alpha)."""
    nd = relative_nullity(ff)
    if nd.sigma_max == 0.0:
        return 0.0
    worst = 0.0
    for T in lf.fields:
        t = ff.to_frame(T)
        t = t / np.linalg.norm(t)
        vals = np.einsum("a,abm->bm", t, ff.sff)
        worst = max(worst, float(np.max(np.linalg.norm(vals, axis=-1))) / nd.sigma_max)
    return worst


def symmetry_residual(A: np.ndarray, C: np.ndarray) -> float:
    """|A C - (A C)^t| / (1 + |A C|) in the spectral norm."""
    M = A @ C
    return float(np.linalg.norm(M - M.T, 2) / (1.0 + np.linalg.norm(M, 2)))


def shape_on_horizontal(ff: FundamentalForms, lf: LocalFrame, xi) -> np.ndarray:
    X = lf.horizontal
    m = X.shape[0]
    A = np.empty((m, m))
    for e in range(m):
        for b in range(m):
            A[e, b] = ff.alpha(X[e], X[b]) @ xi
    return 0.5 * (A + A.T)


def _shifted_points(point, direction, h):
    p = np.asarray(point, dtype=float)
    d = np.asarray(direction, dtype=float)
    return [p + s * d for s in (h, -h, h / 2, -h / 2)]


def _richardson(vals, h):
    """Central differences at h and h/2 combined to fourth order."""
    d1 = (vals[0] - vals[1]) / (2 * h)
    d2 = (vals[2] - vals[3]) / h
    return (4 * d2 - d1) / 3


def check_hypotheses(chart: Chart, point, D: Distribution, tol: float = HYPOTHESIS_TOL):
    tower = evaluate_tower(chart, point, 2)
    ff = fundamental_forms(tower, chart.ambient)
    lf = local_frame(tower, D)
    tg = totally_geodesic_residual(lf)
    mem = nullity_membership(ff, lf)
    if tg >= tol:
        raise HypothesisError(f"{D.label} is not totally geodesic at {lf.point.tolist()} (residual {tg:.2e})")
    if mem >= tol:
        raise HypothesisError(f"{D.label} is not inside the relative nullity at {lf.point.tolist()} (residual {mem:.2e})")
    return tower, ff, lf


def c1_residual_from_frames(lf: LocalFrame, shifted: list[LocalFrame], c: float, h: float,
                            field_s: int, field_t: int) -> float:
    """Residual of  nabla^h_S C_T = C_T C_S + C_{nabla_S T} + c <S,T> I."""
    base = splitting_from_frame(lf)
    mats = [splitting_from_frame(f).matrices[field_t] for f in shifted]
    dC = _richardson(mats, h)  # S(c_T) in the moving frame
    dX = _richardson([f.horizontal for f in shifted], h)  # S(X_a) components
    S = lf.fields[field_s]
    m = lf.horizontal.shape[0]
    omega = np.empty((m, m))
    for a in range(m):
        nab = dX[a] + np.einsum("kij,i,j->k", lf.gamma, S, lf.horizontal[a])
        omega[:, a] = lf.horizontal_part(nab)
    CT = base.matrices[field_t]
    CS = base.matrices[field_s]
    lhs = dC + omega @ CT - CT @ omega
    beta = lf.vertical_coeffs(lf.covariant(S, field_t))
    rhs = CT @ CS + np.einsum("a,aij->ij", beta, base.matrices) + c * lf.inner(S, lf.fields[field_t]) * np.eye(m)
    diff = np.linalg.norm(lhs - rhs, 2)
    return float(diff / (1.0 + max(np.linalg.norm(lhs, 2), np.linalg.norm(rhs, 2))))


def residual_C1(chart: Chart, point, D: Distribution, c: float, tol: float = 1e-5,
                h: float = FD_STEP) -> IdentityResidualReport:
    tower, ff, lf = check_hypotheses(chart, point, D)
    worst = 0.0
    for s in range(D.rank):
        pts = _shifted_points(lf.point, lf.fields[s], h)
        shifted = [local_frame(evaluate_tower(chart, p, 2), D, pivot=lf.pivot) for p in pts]
        for t in range(D.rank):
            worst = max(worst, c1_residual_from_frames(lf, shifted, c, h, s, t))
    return IdentityResidualReport(f"C1[{D.label}, c={c}]", worst, tol, lf.point)


def residual_codazzi_symmetry(chart: Chart, point, D: Distribution, xi=None,
                              tol: float = 1e-5) -> IdentityResidualReport:
    tower, ff, lf = check_hypotheses(chart, point, D)
    return IdentityResidualReport(f"C3[{D.label}]", codazzi_symmetry_from_frame(ff, lf, xi), tol, lf.point)


def codazzi_symmetry_from_frame(ff: FundamentalForms, lf: LocalFrame, xi=None) -> float:
    st = splitting_from_frame(lf)
    normals = ff.normal_frame if xi is None else np.atleast_2d(xi)
    worst = 0.0
    for nu in normals:
        A = shape_on_horizontal(ff, lf, nu)
        for CT in st.matrices:
            worst = max(worst, symmetry_residual(A, CT))
    return worst


def ambient_splitting_tensor(chart: Chart, point, field_fn: Callable[[list[Jet]], list[Jet]]) -> np.ndarray:
    """Independent route to C_T for a rank-one D: differentiate the ambient
    vector field Phi_* T and project, without Christoffel symbols.

    Returns the matrix in the same D^perp frame convention as
    :func:`splitting_tensor` (frame built from the same local_frame).
    """
    D = Distribution(1, lambda p: [field_fn(p)], "T")
    p = np.asarray(point, dtype=float)
    tower2 = evaluate_tower(chart, p, 2)
    lf = local_frame(tower2, D)
    n = p.shape[0]
    seeds = J.seed_variables(p, JetBudget(2 + chart.order_boost, n))
    coords = [c.truncate(2) for c in chart.evaluator(seeds)]
    tcomp = [c.truncate(1) for c in field_fn(J.seed_variables(p, JetBudget(1, n)))]
    # ambient field t = sum_i T^i dPhi/dx_i, as order-1 jets
    d1 = [[c.derivative(i) for c in coords] for i in range(n)]
    t_amb = [sum((tcomp[i] * d1[i][m] for i in range(n)), start=tcomp[0] * 0.0) for m in range(len(coords))]
    grad = np.array([[tj.derivative(i).value for tj in t_amb] for i in range(n)])  # (n, M)
    jac = tower2.jacobian
    Xamb = lf.horizontal @ jac  # (m, M)
    mats = np.empty((lf.horizontal.shape[0],) * 2)
    for b, Xb in enumerate(lf.horizontal):
        DXt = Xb @ grad
        mats[:, b] = -(Xamb @ DXt)
    return mats
