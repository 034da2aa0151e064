"""Higher normal spaces, higher fundamental forms and curvature ellipses."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nullitylab.immersion import (
    AmbientSpace,
    Chart,
    DerivativeTower,
    FundamentalForms,
    GeometryError,
    _fix_sign,
    evaluate_tower,
    fundamental_forms,
)

FLAG_REL_TOL = 1e-6
PROBE_STEP = 1e-3


@dataclass
class OsculatingFlag:
    """Orthogonal filtration N_1, N_2, ... of the normal space at one point."""

    point: np.ndarray
    ambient: AmbientSpace
    intrinsic_dim: int
    ranks: list[int]
    bases: list[np.ndarray]  # each (rank, M), orthonormal
    stage_singular_values: list[np.ndarray]
    nicely_curved_ok: bool | None = None

    @property
    def tau(self) -> int:
        return len(self.ranks)

    @property
    def tau_open(self) -> int:
        """Deepest order carrying an ellipse: a final rank-one stage is dropped
        when the codimension is odd."""
        codim_parity = (self.ambient.coords - self.intrinsic_dim) % 2
        if self.ranks and codim_parity == 1 and self.ranks[-1] == 1:
            return self.tau - 1
        return self.tau

    def basis(self, ell: int) -> np.ndarray:
        if ell < 1:
            raise ValueError("normal spaces are indexed from 1")
        if ell > self.tau:
            return np.zeros((0, self.ambient.coords))
        return self.bases[ell - 1]


def _stage_ranks(tower: DerivativeTower, ambient: AmbientSpace, rel_tol: float):
    M = tower.partials.shape[-1]
    q, _ = np.linalg.qr(tower.jacobian.T)
    span = q.T
    if ambient.kind == "sphere":
        p = tower.position - span.T @ (span @ tower.position)
        span = np.vstack([span, p / np.linalg.norm(p)])
    ranks, bases, svals = [], [], []
    for ell in range(1, tower.order):
        if span.shape[0] >= M:
            break
        _, raw = tower.derivatives(ell + 1)
        scale = float(np.max(np.linalg.norm(raw, axis=-1)))
        resid = raw - (raw @ span.T) @ span
        _, s, vt = np.linalg.svd(resid, full_matrices=False)
        if scale == 0.0 or s[0] < rel_tol * scale:
            break
        rank = int(np.sum(s >= rel_tol * s[0]))
        basis = np.array([_fix_sign(v) for v in vt[:rank]])
        # reorthogonalize against the accumulated span
        basis = basis - (basis @ span.T) @ span
        basis, _ = np.linalg.qr(basis.T)
        basis = np.array([_fix_sign(v) for v in basis.T])
        ranks.append(rank)
        bases.append(basis)
        svals.append(s)
        span = np.vstack([span, basis])
    return ranks, bases, svals


def osculating_flag(tower: DerivativeTower, ambient: AmbientSpace, rel_tol: float = FLAG_REL_TOL,
                    chart: Chart | None = None, probe_step: float = PROBE_STEP) -> OsculatingFlag:
    """Flag of higher normal spaces from the derivative tower.

    When ``chart`` is given the ranks are also computed at four neighbouring
    points and ``nicely_curved_ok`` reports whether they agree.
    """
    if tower.batch_shape:
        raise ValueError("osculating_flag expects an unbatched tower")
    ranks, bases, svals = _stage_ranks(tower, ambient, rel_tol)
    ok = None
    if chart is not None:
        ok = True
        p = np.asarray(tower.point, dtype=float)
        for i in range(p.shape[0]):
            for sgn in (1.0, -1.0):
                q = p.copy()
                q[i] += sgn * probe_step
                if not chart.contains(q):
                    continue
                other = evaluate_tower(chart, q, tower.order)
                r2, _, _ = _stage_ranks(other, ambient, rel_tol)
                ok = ok and (r2 == ranks)
    return OsculatingFlag(np.asarray(tower.point, float), ambient, tower.dims, ranks, bases, svals, ok)


def higher_form(tower: DerivativeTower, flag: OsculatingFlag, s: int, direction) -> np.ndarray:
    """alpha_s(Z, ..., Z): the N_{s-1} part of the s-th derivative along Z.

    ``s = 1`` returns the tangent vector.  Complex directions are allowed.
    Beyond the flag depth the form vanishes.
    """
    if s < 1:
        raise ValueError("form order must be at least 1")
    if s > tower.order:
        raise ValueError(f"order-{s} form needs a tower of order >= {s}, got {tower.order}")
    d = tower.directional(s, direction)
    if s == 1:
        return d
    B = flag.basis(s - 1)
    return (d @ B.T) @ B


@dataclass
class EllipticStructure:
    """Almost complex structure on a plane of parameter vectors.

    ``frame`` holds two parameter-coordinate vectors, orthonormal for the
    induced metric; ``J`` acts on components in that frame.
    """

    frame: np.ndarray  # (2, n)
    J: np.ndarray  # (2, 2)
    tol: float = 1e-10
    angle: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self):
        self.frame = np.asarray(self.frame, dtype=float)
        self.J = np.asarray(self.J, dtype=float)
        if self.J.shape != (2, 2) or self.frame.shape[0] != 2:
            raise GeometryError("elliptic structure needs a plane and a 2x2 matrix")
        defect = np.linalg.norm(self.J @ self.J + np.eye(2), 2)
        if defect > self.tol:
            raise GeometryError(f"J^2 + I has norm {defect:.2e}, not an almost complex structure")
        S = 0.5 * (self.J + self.J.T)
        a = 0.5 * (S[0, 0] - S[1, 1])
        c = S[0, 1]
        tr = 0.5 * (S[0, 0] + S[1, 1])
        r = np.hypot(a, c)
        if r <= 1e-14:
            x = 0.0
        else:
            if abs(tr) > r:
                raise GeometryError("no unit Z with <Z, JZ> = 0")
            x = np.arctan2(c, a) + np.arccos(np.clip(-tr / r, -1.0, 1.0))
        self.angle = 0.5 * x
        self.b = float(np.linalg.norm(self.J @ self.z_components))

    @property
    def z_components(self) -> np.ndarray:
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    @property
    def Z(self) -> np.ndarray:
        return self.z_components @ self.frame

    @property
    def JZ(self) -> np.ndarray:
        return (self.J @ self.z_components) @ self.frame

    def apply(self, X) -> np.ndarray:
        """J applied to a parameter vector lying in the plane."""
        G = self.frame @ self.frame.T
        comps = np.linalg.solve(G, self.frame @ np.asarray(X))
        return (self.J @ comps) @ self.frame

    @classmethod
    def rotation(cls, ff: FundamentalForms) -> "EllipticStructure":
        """Rotation by a right angle on the tangent plane of a surface."""
        if ff.n != 2:
            raise GeometryError("rotation structure needs a surface")
        return cls(ff.frame_coeffs, np.array([[0.0, -1.0], [1.0, 0.0]]))

    @classmethod
    def from_splitting(cls, splitting, index: int = 0, tol: float = 1e-5) -> "EllipticStructure":
        """J = C_T on the complement of a rank-one distribution."""
        if splitting.basis.shape[0] != 2:
            raise GeometryError("complementary distribution is not a plane")
        return cls(splitting.basis, splitting.matrices[index], tol=tol)


@dataclass
class CurvatureEllipse:
    order: int
    kappa: float
    mu: float
    circle_defect: float
    center_norm: float
    samples: np.ndarray = field(repr=False, default=None)

    @classmethod
    def from_samples(cls, order: int, pts: np.ndarray) -> "CurvatureEllipse":
        n = pts.shape[0]
        center = pts.mean(axis=0)
        s = np.linalg.svd(pts - center, compute_uv=False)
        s = np.concatenate([s, np.zeros(2)])
        kappa, mu = float(s[0] * np.sqrt(2.0 / n)), float(s[1] * np.sqrt(2.0 / n))
        tot = kappa**2 + mu**2
        defect = (kappa**2 - mu**2) / tot if tot > 0 else float("nan")
        return cls(order, kappa, mu, float(defect), float(np.linalg.norm(center)), pts)


def curvature_ellipse(tower: DerivativeTower, flag: OsculatingFlag, ell: int, J: EllipticStructure,
                      n_samples: int = 64, start_angle: float = 0.0) -> CurvatureEllipse:
    """Sampled ellipse theta -> alpha_{ell+1}(Z_theta, ..., Z_theta)."""
    if n_samples < 16:
        raise ValueError("need at least 16 samples")
    if ell < 0 or ell > flag.tau_open:
        raise GeometryError(f"ellipse of order {ell} undefined: flag depth {flag.tau_open}")
    Z, JZ = J.Z, J.JZ
    if start_angle:
        Z, JZ = np.cos(start_angle) * Z + np.sin(start_angle) * JZ, -np.sin(start_angle) * Z + np.cos(start_angle) * JZ
    # full turn: for odd orders half a turn does not close the curve
    th = 2 * np.pi * np.arange(n_samples) / n_samples
    pts = np.array([higher_form(tower, flag, ell + 1, np.cos(t) * Z + np.sin(t) * JZ) for t in th])
    return CurvatureEllipse.from_samples(ell, pts)


def conformal_factor(tower: DerivativeTower, tol: float = 1e-8) -> float:
    G = tower.jacobian @ tower.jacobian.T
    if G.shape != (2, 2):
        raise GeometryError("conformality is checked on surfaces")
    lam2 = 0.5 * (G[0, 0] + G[1, 1])
    if abs(G[0, 0] - G[1, 1]) > tol * lam2 or abs(G[0, 1]) > tol * lam2:
        raise GeometryError("chart is not conformal")
    return float(np.sqrt(lam2))


def isotropy_defect(tower: DerivativeTower, flag: OsculatingFlag, r: int,
                    conformal_tol: float = 1e-8, minimal_tol: float = 1e-8) -> float:
    """|<xi, xi>| / <xi, conj xi> for xi = alpha_r(E, ..., E), E = (d_u + i d_v)/lambda."""
    lam = conformal_factor(tower, conformal_tol)
    ff = fundamental_forms(tower, flag.ambient)
    if ff.mean_curvature > minimal_tol * max(ff.scale, 1e-300):
        raise GeometryError(f"chart is not minimal (H = {ff.mean_curvature:.2e})")
    E = np.array([1.0, 1.0j]) / lam
    xi = higher_form(tower, flag, r, E)
    den = float(np.real(np.sum(xi * np.conj(xi))))
    if den == 0.0:
        return float("nan")
    return float(abs(np.sum(xi * xi)) / den)


def ellipticity_defect(ff: FundamentalForms, J: EllipticStructure, n_samples: int = 64) -> float:
    """max ||alpha(X,X) + alpha(JX,JX)|| over unit X, relative to
    max (||alpha(X,X)|| + ||alpha(JX,JX)||)."""
    worst, scale = 0.0, 0.0
    for t in np.pi * np.arange(n_samples) / n_samples:
        x = np.array([np.cos(t), np.sin(t)])
        X = x @ J.frame
        JX = (J.J @ x) @ J.frame
        a, b = ff.alpha(X, X), ff.alpha(JX, JX)
        worst = max(worst, float(np.linalg.norm(a + b)))
        scale = max(scale, float(np.linalg.norm(a) + np.linalg.norm(b)))
    if scale == 0.0:
        return 0.0
    return worst / scale
