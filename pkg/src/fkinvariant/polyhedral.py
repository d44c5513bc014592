"""Boundary sequences at the corner of two strongly pseudoconvex pieces in C^2: classes, dilations, limits."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import domains as dm
from .core import MixedPolynomial, laplacian_nonneg


class PolyhedralError(ValueError):
    pass


RADIAL = "radial"
TANGENTIAL = "q-tangential"
MIXED_A = "mixed-a"
MIXED_B = "mixed-b"
UNCLASSIFIABLE = "unclassifiable"


@dataclass(frozen=True)
class ApproachClass:
    """kind plus diagnostics; `near` is the piece (0 or 1) whose distance is the small one."""

    kind: str
    near: int | None = None
    m: float | None = None
    exponent: float | None = None
    ratios: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def classified(self) -> bool:
        return self.kind != UNCLASSIFIABLE


def _ratios(lam, mu) -> dict:
    return {"lam/mu": lam / mu, "sqrt(lam)/mu": np.sqrt(lam) / mu, "sqrt(mu)/lam": np.sqrt(mu) / lam}


def classify(lam, mu, window: int = 8, tol: float = 0.05) -> ApproachClass:
    """Classify a boundary sequence from the last `window` distance pairs.

    Uses the exponent a in mu ~ lam^a fitted on the window (scale free):
    a = 1 radial; a < 1/2 tangential to the first piece; a = 1/2 mixed with
    m = lim sqrt(lam)/mu; 1/2 < a < 1 mixed with sqrt(lam)/mu -> infinity; a > 1 the same
    cases with the pieces swapped.  Trends that are not monotone are reported, not guessed.
    """
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if lam.shape != mu.shape or lam.ndim != 1:
        raise PolyhedralError("lam and mu must be 1-D of equal length")
    if len(lam) < window:
        raise PolyhedralError(f"need at least {window} terms")
    if np.any(lam <= 0) or np.any(mu <= 0):
        raise PolyhedralError("distances must be positive")
    L, M = lam[-window:], mu[-window:]
    diag = {k: v[-window:] for k, v in _ratios(lam, mu).items()}
    if not (np.all(np.diff(L) < 0) and np.all(np.diff(M) < 0)):
        return ApproachClass(UNCLASSIFIABLE, ratios=diag, reason="distances are not decreasing")
    x, y = np.log(L), np.log(M)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    if np.max(np.abs(resid)) > tol * max(np.ptp(y), 1.0):
        return ApproachClass(UNCLASSIFIABLE, exponent=a, ratios=diag, reason="no power law on the window")
    if abs(a - 1) <= tol:
        return ApproachClass(RADIAL, exponent=a, ratios=diag)
    near = 0
    if a > 1:
        # mu is the small distance: swap roles, mu ~ lam^a  <=>  lam ~ mu^(1/a)
        near, L, M, a = 1, M, L, 1 / a
    s = np.sqrt(L) / M
    if abs(a - 0.5) <= tol:
        spread = np.ptp(s) / np.mean(s)
        if spread <= tol:
            return ApproachClass(MIXED_A, near, float(s[-1]), a if near == 0 else 1 / a, diag)
        return ApproachClass(UNCLASSIFIABLE, near, exponent=a, ratios=diag, reason="sqrt ratio does not settle")
    if a < 0.5:
        if np.all(np.diff(s) < 0):
            return ApproachClass(TANGENTIAL, near, exponent=a if near == 0 else 1 / a, ratios=diag)
        return ApproachClass(UNCLASSIFIABLE, near, exponent=a, ratios=diag, reason="sqrt ratio not decreasing")
    if np.all(np.diff(s) > 0):
        return ApproachClass(MIXED_B, near, exponent=a if near == 0 else 1 / a, ratios=diag)
    return ApproachClass(UNCLASSIFIABLE, near, exponent=a, ratios=diag, reason="sqrt ratio not increasing")


# ------------------------------------------------------------------ geometry

def check_normalized(D: dm.PolyhedralC2, tol: float = 1e-12) -> None:
    """The corner sits at 0 with inner normals along the Im z_1 and Im z_2 axes."""
    if len(D.pieces) != 2:
        raise PolyhedralError("a corner needs two pieces")
    for p in D.pieces:
        c = p.Q.coeffs
        if abs(c.get((0, 0), 0)) > tol or abs(c.get((1, 0), 0)) > tol:
            raise PolyhedralError("apply the normalising affine map first: pieces must vanish to second order at 0")


def distances(D: dm.PolyhedralC2, points) -> tuple[np.ndarray, np.ndarray]:
    """lam_j, mu_j: Euclidean distances to the zero sets of the sigma = 0 and sigma = 1 pieces."""
    idx = {p.sigma: i for i, p in enumerate(D.pieces)}
    lam = np.array([dm.piece_distance(D, z, idx[0]) for z in points])
    mu = np.array([dm.piece_distance(D, z, idx[1]) for z in points])
    return lam, mu


def _scales(cls: ApproachClass, lam: float, mu: float) -> np.ndarray:
    if cls.kind in (RADIAL, MIXED_A, MIXED_B):
        return np.array([lam, mu])
    if cls.kind == TANGENTIAL:
        return np.array([lam, np.sqrt(lam)]) if cls.near == 0 else np.array([np.sqrt(mu), mu])
    raise PolyhedralError("cannot dilate an unclassifiable sequence")


def _dz(Q: MixedPolynomial, a: complex) -> complex:
    return sum(c * j * a ** (j - 1) * np.conj(a) ** k for (j, k), c in Q.coeffs.items() if j > 0)


def _tangential_dilation(D: dm.PolyhedralC2, p, near: int, lam: float) -> dm.Pullback:
    """Case II dilation preceded by the shear that fixes the near piece.

    The printed map leaves a linear term of size |p_tau|/sqrt(lam) in the near piece.  The
    affine automorphism z_s -> z_s - 2i dQ(p_t)(z_t - p_t) of {Im z_s > Q(z_t)} removes it, so
    the near piece becomes {Im U + delta/lam > Q_2(W)} exactly, Q_2 the quadratic part.
    """
    s, t = near, 1 - near
    Q = {pc.sigma: pc for pc in D.pieces}[near].Q
    shear = 2j * _dz(Q, p[t])
    r = np.sqrt(lam)
    J = np.zeros((2, 2), complex)
    J[s, s], J[s, t], J[t, t] = lam, shear * r, r

    def to_base(Z):
        return p + np.asarray(Z, dtype=complex) @ J.T

    def jac(Z):
        return np.broadcast_to(J, np.shape(Z)[:-1] + (2, 2))

    return dm.Pullback(D, to_base, jac, f"dilated(tangential to piece {near};lam={lam:.3g})", lam, False)


def polyhedral_dilate(D: dm.PolyhedralC2, points, cls: ApproachClass) -> list[tuple[dm.Domain, np.ndarray]]:
    """Dilated domains with base point 0.

    Radial and mixed: L^j(D - p^j), z_1 divided by lam_j and z_2 by mu_j; each piece is
    renormalised by the factor of its graph coordinate, so the result stays polyhedral.
    Tangential: the sheared dilation of `_tangential_dilation`, returned as an affine pullback.
    """
    check_normalized(D)
    if not cls.classified:
        raise PolyhedralError(f"unclassifiable sequence: {cls.reason}")
    lam, mu = distances(D, points)
    out = []
    for p, l, m in zip(points, lam, mu):
        p = np.asarray(p, dtype=complex)
        if cls.kind == TANGENTIAL:
            Dj = _tangential_dilation(D, p, cls.near, l if cls.near == 0 else m)
        else:
            s = _scales(cls, l, m)
            Dj = dm.PolyhedralC2(tuple(piece.translated_scaled(p, s) for piece in D.pieces))
        out.append((Dj, np.zeros(2, complex)))
    return out


def dilation_image(p, p_j, s) -> np.ndarray:
    return (np.asarray(p, dtype=complex) - np.asarray(p_j, dtype=complex)) / np.asarray(s)


# ------------------------------------------------------------------ limits

@dataclass
class PredictedLimit:
    domain: dm.Domain
    expected: float | None  # None: no closed value, compute numerically
    note: str


def _quadratic_part(piece: dm.QuadraticPiece) -> MixedPolynomial:
    return piece.Q.homogeneous_part(2)


def predicted_limit(cls: ApproachClass, D: dm.PolyhedralC2 | None = None, Q1: MixedPolynomial | None = None) -> PredictedLimit:
    """Limit domain of the dilations and the value F takes at its base point."""
    if cls.kind in (RADIAL, MIXED_B):
        return PredictedLimit(dm.HalfPlaneCorner(1.0, 1.0), 1.0, "corner, biholomorphic to the bidisc")
    near = cls.near or 0
    if Q1 is None:
        if D is None:
            Q1 = MixedPolynomial.modulus_power(1)
        else:
            Q1 = _quadratic_part({p.sigma: p for p in D.pieces}[near])
    L = laplacian_nonneg(Q1)
    strict = bool(L) and L.min_value > 0
    if cls.kind == TANGENTIAL:
        piece = dm.QuadraticPiece(near, Q1 + MixedPolynomial({(0, 0): -1.0}))
        return PredictedLimit(dm.PolyhedralC2((piece,)), 1.0, "Siegel half-space, biholomorphic to the ball")
    if cls.kind == MIXED_A:
        if not strict:
            return PredictedLimit(dm.HalfPlaneCorner(1.0, 1.0), 1.0, "degenerate quadratic part: corner")
        if near == 1:
            raise PolyhedralError("mixed limits are stated with the first piece near; relabel coordinates")
        return PredictedLimit(dm.SiegelCorner(Q1, cls.m), None, "Siegel corner: compute numerically")
    raise PolyhedralError("no prediction for an unclassifiable sequence")


# ------------------------------------------------------------------ values

def siegel_fk(S: dm.SiegelCorner, radii=(8.0, 16.0, 32.0), degree: int = 12, points: int = 2**20, seed: int = 0,
              nodes=(12, 16), solver: dict | None = None):
    """F at the origin of {Im z_1 + 1 > Q1(z_2)/m^2, Im z_2 > -1}.

    Kernel from truncations at growing radii (extrapolated), indicatrix from extremal discs in
    the Cayley chart.  A truncation spread above 20% of the value adds a low-confidence note.
    """
    from .bergman import bergman_truncated
    from .invariant import DEFAULT_SOLVER, FkResult
    from .kobayashi import indicatrix_volume

    z = np.zeros(2, complex)
    t = bergman_truncated(S, z, radii, degree=degree, points=points, seed=seed)
    K = t.extrapolated
    # a finite basis only under-estimates the kernel: the step from degree - 2 bounds that part
    lo = bergman_truncated(S, z, radii, degree=max(degree - 2, 1), points=points, seed=seed).extrapolated
    sK = t.spread + abs(t.values[-1] - K) + abs(K - lo)
    # the indicatrix has corners in both angles here; degree 8 discs sit up to 1% high
    kw = dict(DEFAULT_SOLVER, seed=seed, degree=12, samples=96)
    kw.update(solver or {})
    est = indicatrix_volume(S, z, mode="product", metric="extremal", nodes=tuple(nodes), solver_kw=kw)
    value = K * est.volume
    sigma = value * (sK / K + est.stderr / est.volume)
    r = FkResult(value, K, est.volume, float(sigma), "truncated", est.method, S.label, list(z))
    spread = (max(t.values) - min(t.values)) / K
    r.notes.append(f"truncation spread {spread:.4g}")
    if spread > 0.2:
        r.notes.append("low confidence: truncation spread above 20%")
    return r


@dataclass
class PolyhedralStudy:
    cls: ApproachClass
    lam: np.ndarray
    mu: np.ndarray
    values: list
    sigmas: list
    predicted: PredictedLimit
    gap: float | None
    notes: list = field(default_factory=list)

    def rows(self):
        for j, (l, m, v) in enumerate(zip(self.lam, self.mu, self.values)):
            yield j, l, m, l / m, np.sqrt(l) / m, v


def polyhedral_study(D: dm.PolyhedralC2, sequence, window: int = 8, tol: float = 0.05, steps: int | None = None,
                     **budget) -> PolyhedralStudy:
    """F on the dilated domains at 0 along the sequence, against the predicted limit value.

    Only the last `steps` points are evaluated (all by default); classification uses the
    whole sequence.
    """
    from .bergman import default_chart
    from .invariant import fk_eval

    lam, mu = distances(D, sequence)
    cls = classify(lam, mu, window, tol)
    pred = predicted_limit(cls, D)
    dil = polyhedral_dilate(D, sequence, cls)
    use = dil if steps is None else dil[len(dil) - steps:]
    vals, sig, notes = [], [], []
    for Dj, b in use:
        try:
            opts = dict(budget)
            if isinstance(Dj, dm.PolyhedralC2) and len(Dj.pieces) == 2:
                # Gram basis in the corner's Cayley chart: agrees with truncation, far cheaper
                opts.setdefault("chart", default_chart(Dj))
            r = fk_eval(Dj, b, "numeric", **opts)
            vals.append(r.value)
            sig.append(r.sigma)
        except Exception as exc:  # per-step failures are part of the report
            vals.append(np.nan)
            sig.append(np.nan)
            notes.append(str(exc))
    gap = None
    if pred.expected is not None and vals and np.isfinite(vals[-1]):
        gap = abs(vals[-1] - pred.expected) / pred.expected
    pad = [np.nan] * (len(lam) - len(vals))
    return PolyhedralStudy(cls, lam, mu, pad + vals, pad + sig, pred, gap, notes)
