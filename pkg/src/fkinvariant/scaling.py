"""Levi corank one scaling: normal forms, special radius, scaling maps, limit models, Hausdorff gaps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import domains as dm
from .core import MixedPolynomial, laplacian_nonneg, poly_sup_norm
from .domains import DomainError


class ScalingError(ValueError):
    pass


# ------------------------------------------------------ mixed polynomial algebra
# dict {(j, k): c} for sum c w^j conj(w)^k, truncated at total degree `top`

def _mul(a: dict, b: dict, top: int) -> dict:
    out: dict = {}
    for (j1, k1), x in a.items():
        for (j2, k2), y in b.items():
            if j1 + k1 + j2 + k2 <= top:
                key = (j1 + j2, k1 + k2)
                out[key] = out.get(key, 0) + x * y
    return out


def _add(a: dict, b: dict, s: complex = 1.0) -> dict:
    out = dict(a)
    for key, y in b.items():
        out[key] = out.get(key, 0) + s * y
    return out


def _conj(a: dict) -> dict:
    return {(k, j): np.conj(c) for (j, k), c in a.items()}


def _compose(f: MixedPolynomial, zeta: complex, eta: dict, top: int) -> dict:
    """Coefficients of f(zeta + eta(w)) with eta a holomorphic polynomial dict."""
    x = _add({(0, 0): zeta}, eta)
    xb = _conj(x)
    out: dict = {}
    jmax = max((j for j, _ in f.coeffs), default=0)
    kmax = max((k for _, k in f.coeffs), default=0)
    pw = [{(0, 0): 1.0}]
    for _ in range(jmax):
        pw.append(_mul(pw[-1], x, top))
    pwb = [{(0, 0): 1.0}]
    for _ in range(kmax):
        pwb.append(_mul(pwb[-1], xb, top))
    for (j, k), c in f.coeffs.items():
        out = _add(out, _mul(pw[j], pwb[k], top), c)
    return out


def _d(f: MixedPolynomial, zeta: complex, conj_var: bool) -> complex:
    """d f / d z (or d f / d zbar) at zeta."""
    s = 0
    for (j, k), c in f.coeffs.items():
        if conj_var and k:
            s += c * k * zeta**j * np.conj(zeta) ** (k - 1)
        if not conj_var and j:
            s += c * j * zeta ** (j - 1) * np.conj(zeta) ** k
    return complex(s)


# ----------------------------------------------------------------- charts

@dataclass(frozen=True)
class SeparableChart:
    """Defining function r(x) = (f1(x_1) + sum_mid |x_j|^2 + fn(x_n) + const)/scale in paper coordinates.

    Paper coordinates are the domain coordinates permuted by `perm` (x = z[perm]); x_1 is
    the degenerate tangential direction and x_n the normal one.  `scale` normalises
    dr/dzbar_n to 1 at the reference boundary point.
    """

    domain: dm.Domain
    perm: tuple
    f1: MixedPolynomial
    fn: MixedPolynomial
    const: float
    scale: float = 1.0

    @property
    def n(self) -> int:
        return len(self.perm)

    def to_paper(self, Z):
        return np.asarray(Z, dtype=complex)[..., list(self.perm)]

    def from_paper(self, X):
        X = np.asarray(X, dtype=complex)
        inv = np.argsort(self.perm)
        return X[..., list(inv)]

    def r(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        mid = np.sum(np.abs(X[..., 1:-1]) ** 2, axis=-1) if self.n > 2 else 0.0
        return (self.f1.eval_raw(X[..., 0]).real + mid + self.fn.eval_raw(X[..., -1]).real + self.const) / self.scale

    def dr_dzbar(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex).ravel()
        out = np.empty(self.n, dtype=complex)
        out[0] = _d(self.f1, X[0], True)
        out[1:-1] = X[1:-1]
        out[-1] = _d(self.fn, X[-1], True)
        return out / self.scale


def chart_for(D: dm.Domain, p) -> SeparableChart:
    """Paper-coordinate chart of a catalog domain at the boundary point p."""
    p = np.asarray(p, dtype=complex).ravel()
    if isinstance(D, dm.Ball) and D.n == 2:
        D2 = dm.EggHi(2, 1)
        ch = chart_for(D2, p)
        return SeparableChart(D, ch.perm, ch.f1, ch.fn, ch.const, ch.scale)
    if isinstance(D, (dm.EggC2, dm.EggHi)):
        if D.n != 2:
            raise ScalingError("separable normal forms are implemented for n = 2 eggs")
        e = D.exponents
        if any(abs(x - round(x)) > 0 for x in e):
            raise ScalingError("egg exponents must be integers for polynomial normal forms")
        g = [abs(p[k]) ** (2 * e[k] - 1) * e[k] for k in range(2)]
        normal = int(np.argmax(g))
        perm = (1 - normal, normal)
        f = [MixedPolynomial.modulus_power(int(round(e[k]))) for k in perm]
        ch = SeparableChart(D, perm, f[0], f[1], -1.0)
    elif isinstance(D, dm.Model):
        ch = SeparableChart(D, tuple(range(D.n)), D.P, MixedPolynomial({(1, 0): 1.0, (0, 1): 1.0}), 0.0)
    else:
        raise ScalingError(f"no normal-form chart for {D.label}")
    x = ch.to_paper(p)
    if abs(ch.r(x)) > 1e-9:
        raise ScalingError("reference point is not on the boundary")
    g = ch.dr_dzbar(x)
    if np.any(np.abs(g[:-1]) > 1e-9) or g[-1].real <= 0 or abs(g[-1].imag) > 1e-12:
        raise ScalingError("normal at the reference point is not along Re x_n")
    return SeparableChart(D, ch.perm, ch.f1, ch.fn, ch.const, float(g[-1].real))


# ------------------------------------------------------------ normal forms

@dataclass(frozen=True)
class NormalFormData:
    """Coefficients of the weight-one automorphism at a boundary point zeta (paper coordinates)."""

    zeta: np.ndarray
    nu: np.ndarray
    P: dict
    m: int
    Q1: dict = field(default_factory=dict)  # holomorphic in x_1 - zeta_1: {k: a_k}
    G: np.ndarray | None = None
    Q2: tuple = ()
    b: dict = field(default_factory=dict)

    def __post_init__(self):
        for l, Pl in self.P.items():
            if Pl.has_harmonic_terms():
                raise ScalingError(f"block P_{l} has harmonic terms")
            if not Pl.is_zero() and not (Pl.is_homogeneous() and Pl.degree == l):
                raise ScalingError(f"block P_{l} is not homogeneous of degree {l}")
        if any(k < 2 for k in self.Q1):
            raise ScalingError("Q1 must start in degree two")

    @property
    def n(self) -> int:
        return len(self.zeta)

    def P_total(self, top: int | None = None) -> MixedPolynomial:
        out = MixedPolynomial()
        for l, Pl in self.P.items():
            if top is None or l <= top:
                out = out + Pl
        return out


def identity_normal_form(P: MixedPolynomial, n: int = 2) -> NormalFormData:
    """Normal form of a model domain at the origin: Phi is the identity."""
    blocks = {l: P.homogeneous_part(l) for l in range(2, P.degree + 1) if not P.homogeneous_part(l).is_zero()}
    m = max(1, (P.degree + 1) // 2)
    nu = np.zeros(n, complex)
    nu[-1] = 1.0
    G = np.eye(n - 2, dtype=complex) if n > 2 else None
    return NormalFormData(np.zeros(n, complex), nu, blocks, m, {}, G, tuple({} for _ in range(n - 2)))


def normal_form(ch: SeparableChart, zeta) -> NormalFormData:
    """Normal form at a boundary point zeta (paper coordinates) of a separable chart.

    Solves for Q1 degree by degree so that r o Phi^{-1} restricted to {w_n = 0} has no
    harmonic monomials up to degree 2m; the blocks P_l are its remaining coefficients.
    """
    zeta = np.asarray(zeta, dtype=complex).ravel()
    if abs(ch.r(zeta)) > 1e-9:
        raise ScalingError("normal form needs a boundary point")
    nu = ch.dr_dzbar(zeta)
    an = np.conj(nu[-1])  # dr/dz_n
    if abs(an) < 1e-12:
        raise ScalingError("dr/dzbar_n vanishes")
    n = ch.n
    if n > 2 and ch.fn.degree > 1:
        raise ScalingError("nonlinear normal coordinate with middle variables is not supported")
    m = max(1, int(np.ceil(max(ch.f1.degree, 2) / 2)))
    top = 2 * m
    c1 = np.conj(nu[0])  # dr/dz_1
    s = ch.scale
    q1: dict[int, complex] = {}

    def restricted(q1):
        # h_n along w_n = 0 (middle variables at zero): (Q1(h1) - c1 h1)/an
        eta = {(k, 0): a / an for k, a in q1.items()}
        eta[(1, 0)] = eta.get((1, 0), 0) - c1 / an
        g = _compose(ch.f1, zeta[0], {(1, 0): 1.0}, top)
        g = _add(g, _compose(ch.fn, zeta[-1], eta, top))
        g = {key: c / s for key, c in g.items() if key != (0, 0)}
        return g

    for k in range(2, top + 1):
        g = restricted(q1)
        ck = g.get((k, 0), 0)
        if abs(ck) > 1e-15:
            # a_k enters the (k, 0) coefficient only through the linear term of fn, with unit weight
            q1[k] = -ck
    g = restricted(q1)
    for (j, k), c in g.items():
        if (j == 0) != (k == 0) and j + k <= top and abs(c) > 1e-10 * max(1.0, max(abs(x) for x in g.values())):
            raise ScalingError("failed to remove harmonic terms")
    blocks = {}
    for l in range(2, top + 1):
        co = {(j, k): c for (j, k), c in g.items() if j + k == l and j and k}
        # symmetrise roundoff
        co = {key: 0.5 * (c + np.conj(co.get((key[1], key[0]), np.conj(c)))) for key, c in co.items()}
        Pl = MixedPolynomial(co, no_harmonic=True)
        if not Pl.is_zero():
            blocks[l] = Pl
    G = np.eye(n - 2, dtype=complex) if n > 2 else None
    return NormalFormData(zeta, nu, blocks, m, q1, G, tuple({} for _ in range(n - 2)))


def _q1(NF: NormalFormData, t):
    return sum(a * t**k for k, a in NF.Q1.items()) if NF.Q1 else 0 * t


def _q1_prime(NF: NormalFormData, t):
    return sum(k * a * t ** (k - 1) for k, a in NF.Q1.items()) if NF.Q1 else 0 * t


def _q2(NF: NormalFormData, t):
    if not NF.Q2:
        return None
    return np.stack([sum(b * t**k for k, b in comp.items()) if comp else 0 * t for comp in NF.Q2], axis=-1)


def phi_apply(NF: NormalFormData, z) -> np.ndarray:
    """(z1 - zeta1, G(z~ - zeta~) - Q2(z1 - zeta1), <z - zeta, nu> - Q1(z1 - zeta1)), paper coordinates."""
    Z = np.asarray(z, dtype=complex)
    h = Z - NF.zeta
    out = np.empty_like(h)
    out[..., 0] = h[..., 0]
    if NF.n > 2:
        mid = h[..., 1:-1] @ NF.G.T
        q2 = _q2(NF, h[..., 0])
        out[..., 1:-1] = mid - (q2 if q2 is not None else 0)
    out[..., -1] = h @ np.conj(NF.nu) - _q1(NF, h[..., 0])
    return out


def phi_inverse(NF: NormalFormData, w) -> np.ndarray:
    """Triangular back-substitution for the weight-graded map."""
    if NF.G is not None and abs(np.linalg.det(NF.G)) < 1e-14:
        raise ScalingError("G is singular")
    W = np.asarray(w, dtype=complex)
    h = np.empty_like(W)
    h[..., 0] = W[..., 0]
    if NF.n > 2:
        q2 = _q2(NF, h[..., 0])
        h[..., 1:-1] = (W[..., 1:-1] + (q2 if q2 is not None else 0)) @ np.linalg.inv(NF.G).T
    nc = np.conj(NF.nu)
    rest = h[..., :-1] @ nc[:-1]
    h[..., -1] = (W[..., -1] + _q1(NF, h[..., 0]) - rest) / nc[-1]
    return h + NF.zeta


def phi_jacobian(NF: NormalFormData, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex).ravel()
    n = NF.n
    J = np.zeros((n, n), complex)
    J[0, 0] = 1.0
    t = z[0] - NF.zeta[0]
    if n > 2:
        J[1:-1, 1:-1] = NF.G
        for a, comp in enumerate(NF.Q2):
            J[1 + a, 0] = -sum(k * b * t ** (k - 1) for k, b in comp.items()) if comp else 0
    J[-1, :] = np.conj(NF.nu)
    J[-1, 0] -= _q1_prime(NF, t)
    return J


def tau(NF: NormalFormData, delta: float) -> float:
    """min over nonzero blocks of (delta/|P_l|)^(1/l)."""
    if delta <= 0:
        raise ScalingError("delta must be positive")
    cands = []
    for l, Pl in NF.P.items():
        s = poly_sup_norm(Pl)
        if s > 0:
            cands.append((delta / s) ** (1.0 / l))
    if not cands:
        raise ScalingError("all blocks vanish: boundary is not of finite type in this chart")
    return float(min(cands))


def tau_vector(NF: NormalFormData, delta: float) -> np.ndarray:
    n = NF.n
    t = np.full(n, np.sqrt(delta))
    t[0] = tau(NF, delta)
    t[-1] = delta
    return t


@dataclass(frozen=True)
class ScalingMap:
    NF: NormalFormData
    delta: float
    tau: np.ndarray

    @classmethod
    def build(cls, NF: NormalFormData, delta: float) -> "ScalingMap":
        return cls(NF, float(delta), tau_vector(NF, delta))

    def apply(self, x):
        return phi_apply(self.NF, x) / self.tau

    def inverse(self, w):
        return phi_inverse(self.NF, np.asarray(w, dtype=complex) * self.tau)

    def inverse_jacobian(self, w) -> np.ndarray:
        W = np.asarray(w, dtype=complex)
        X = self.inverse(W)
        flat = X.reshape(-1, self.NF.n)
        J = np.stack([np.linalg.inv(phi_jacobian(self.NF, x)) for x in flat]) * self.tau[None, None, :]
        return J.reshape(W.shape[:-1] + (self.NF.n, self.NF.n))


# --------------------------------------------------------- scaled sequences

@dataclass
class ScaleStep:
    index: int
    point: np.ndarray  # p_j, domain coordinates
    eps: float
    zeta: np.ndarray  # boundary point above p_j, paper coordinates
    smap: ScalingMap
    domain: dm.Pullback  # D^j
    base_point: np.ndarray  # b_j


def normal_offset(ch: SeparableChart, x, tol: float = 1e-12) -> float:
    """eps > 0 with r(x + ('0, eps)) = 0, x in paper coordinates."""
    x = np.asarray(x, dtype=complex).ravel()
    e = np.zeros(ch.n, complex)
    e[-1] = 1.0
    f = lambda t: float(ch.r(x + t * e))
    if f(0.0) >= 0:
        raise ScalingError("point is not inside the domain")
    hi = 1e-3
    while f(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise ScalingError("normal line does not meet the boundary in this chart")
    return brentq(f, 0.0, hi, xtol=tol * 1e-3, rtol=4 * np.finfo(float).eps, maxiter=500)


def scaled_domain(D: dm.Domain, ch: SeparableChart, smap: ScalingMap, eps: float, name: str) -> dm.Pullback:
    inv = list(np.argsort(ch.perm))

    def to_base(W):
        return ch.from_paper(smap.inverse(W))

    def jac(W):
        return smap.inverse_jacobian(W)[..., inv, :]

    return dm.Pullback(D, to_base, jac, name, rho_scale=eps * ch.scale)


def scale_sequence(D: dm.Domain, points, boundary) -> list[ScaleStep]:
    """Scaled domains D^j = Delta o Phi(D) and base points b_j for interior points p_j -> boundary."""
    boundary = np.asarray(boundary, dtype=complex).ravel()
    ch = chart_for(D, boundary)
    steps = []
    for j, p in enumerate(points):
        p = np.asarray(p, dtype=complex).ravel()
        if not dm.contains(D, p):
            raise ScalingError(f"p_{j} is not inside the domain")
        x = ch.to_paper(p)
        eps = normal_offset(ch, x)
        zeta = x.copy()
        zeta[-1] += eps
        NF = normal_form(ch, zeta)
        smap = ScalingMap.build(NF, eps)
        Dj = scaled_domain(D, ch, smap, eps, f"scaled({D.label};j={j})")
        steps.append(ScaleStep(j, p, eps, zeta, smap, Dj, smap.apply(x)))
    eps = np.array([s.eps for s in steps])
    if len(eps) > 1 and not np.all(np.diff(eps) < 0):
        raise ScalingError("sequence does not approach the boundary (boundary distances do not decrease)")
    return steps


def radial_points(boundary, steps: int, d_min: float = 1e-3, d_max: float = 0.5) -> list[np.ndarray]:
    """p_j = (1 - d_j) p on a geometric ladder of d_j."""
    p = np.asarray(boundary, dtype=complex).ravel()
    return [(1 - d) * p for d in np.geomspace(d_max, d_min, steps)]


# ----------------------------------------------------------------- limits

def egg_tangential_points(mu: float, c: float, steps: int, d_min: float = 1e-3, d_max: float = 0.5) -> list[np.ndarray]:
    """Points of {|w|^(2 mu) = c (1 - |z|^2)} in the egg, z = 1 - d real, approaching (1, 0).

    The egg automorphisms fixing (1, 0) map every such point to (0, c^(1/(2 mu))), so F is
    constant along the family.
    """
    if not 0 < c < 1:
        raise ScalingError("c must lie in (0, 1) for the points to be inside")
    out = []
    for d in np.geomspace(d_max, d_min, steps):
        x = 1 - d
        out.append(np.array([x, (c * (1 - x * x)) ** (1 / (2 * mu))], dtype=complex))
    return out


def limit_model(D: dm.Domain, boundary, approach: str = "normal", P: MixedPolynomial | None = None) -> dm.Model:
    """Limit of the scaled domains.

    Along the normal line the base point of the normal form is fixed, so the lowest nonzero
    block dominates and tau normalises it to sup norm one.  Other approaches depend on the
    subsequence; they need the limit polynomial from the caller.
    """
    if P is not None:
        return dm.Model(P, D.n)
    if approach != "normal":
        raise ScalingError("subsequence-dependent limit: supply the limit polynomial for non-normal approach")
    boundary = np.asarray(boundary, dtype=complex).ravel()
    if isinstance(D, dm.Model) and np.allclose(boundary, 0):
        NF = identity_normal_form(D.P, D.n)
    else:
        ch = chart_for(D, boundary)
        NF = normal_form(ch, ch.to_paper(boundary))
    l0 = min(NF.P)
    Pl = NF.P[l0]
    Pl = Pl.scaled(1.0 / poly_sup_norm(Pl))
    # exact monomials keep their closed-form status
    Pl = MixedPolynomial({k: complex(round(c.real, 12), round(c.imag, 12)) for k, c in Pl.coeffs.items()}, True)
    if not laplacian_nonneg(Pl):
        raise ScalingError("limit block is not subharmonic")
    return dm.Model(Pl, D.n)


# ---------------------------------------------------------- Hausdorff gaps

def _grid_axes(center, half: float, N: int, offset: float):
    c = np.concatenate([[x.real, x.imag] for x in np.asarray(center, dtype=complex).ravel()])
    h = 2 * half / N
    return [ci - half + (np.arange(N) + offset) * h for ci in c], h


def _window_mask(D, axes, chunk: int = 1 << 20) -> np.ndarray:
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape))
    out = np.empty(total, bool)
    for s in range(0, total, chunk):
        idx = np.unravel_index(np.arange(s, min(s + chunk, total)), shape)
        real = [axes[k][idx[k]] for k in range(len(axes))]
        Z = np.stack([real[2 * i] + 1j * real[2 * i + 1] for i in range(len(axes) // 2)], axis=-1)
        with np.errstate(all="ignore"):
            out[s:s + len(Z)] = D.inside(Z)
    return out.reshape(shape)


def _boundary_cells(mask: np.ndarray) -> np.ndarray:
    edge = np.zeros_like(mask)
    for ax in range(mask.ndim):
        for sh in (1, -1):
            edge |= mask & ~np.roll(mask, sh, axis=ax)
    return edge


def hausdorff_gap(A: dm.Domain, B: dm.Domain, center, half: float = 4.0, N: int = 64,
                  offset: float = (np.sqrt(5) - 1) / 2) -> tuple[float, float]:
    """Symmetric Hausdorff distance of A and B inside a box, on an N-per-axis grid.

    Returns (gap, grid spacing).  Grid points of A outside B are measured to the nearest
    boundary cell of B and vice versa, so identical masks give exactly zero.
    """
    from scipy.spatial import cKDTree

    if A.n != B.n:
        raise DomainError("dimension mismatch")
    axes, h = _grid_axes(center, half, N, offset)
    MA, MB = _window_mask(A, axes), _window_mask(B, axes)
    if not MA.any() or not MB.any():
        raise ScalingError("empty intersection with the window")
    gap = 0.0
    for X, Y in ((MA, MB), (MB, MA)):
        lone = X & ~Y
        if not lone.any():
            continue
        tree = cKDTree(np.argwhere(_boundary_cells(Y)))
        d, _ = tree.query(np.argwhere(lone))
        gap = max(gap, float(d.max()) * h)
    return gap, h


# ------------------------------------------------------------ F^k studies

@dataclass
class ScaleStudyStep:
    index: int
    eps: float
    base_point: np.ndarray
    kernel: float
    indicatrix: float
    value: float
    sigma: float
    gap: float | None = None
    error: str | None = None


@dataclass
class ScaleStudyResult:
    domain: str
    boundary: np.ndarray
    steps: list
    limit_label: str | None
    limit_value: float | None
    limit_sigma: float | None
    cauchy_gap: float | None
    notes: list = field(default_factory=list)

    def trend_estimate(self) -> tuple[float, float]:
        """Last value, with an uncertainty covering the spread of the last three and their sigmas."""
        good = [s for s in self.steps if s.error is None]
        if not good:
            raise ScalingError("no successful steps")
        tail = good[-3:]
        vals = np.array([s.value for s in tail])
        sig = max(s.sigma for s in tail)
        return float(vals[-1]), float(np.ptp(vals) + sig)

    def to_json(self) -> dict:
        def c(z):
            return [[float(x.real), float(x.imag)] for x in np.asarray(z).ravel()]

        return {
            "domain": self.domain,
            "boundary": c(self.boundary),
            "steps": [{"j": s.index, "eps": s.eps, "base_point": c(s.base_point), "kernel": s.kernel,
                       "indicatrix": s.indicatrix, "value": s.value, "sigma": s.sigma, "gap": s.gap,
                       "error": s.error} for s in self.steps],
            "limit": {"model": self.limit_label, "value": self.limit_value, "sigma": self.limit_sigma},
            "cauchy_gap": self.cauchy_gap,
            "notes": self.notes,
        }


def fk_scale_study(D: dm.Domain, points, boundary, approach: str = "normal", limit_P: MixedPolynomial | None = None,
                   budget: dict | None = None, gaps: bool = False, gap_grid: int = 64) -> ScaleStudyResult:
    """F^k_D(p_j) = K_{D^j}(b_j) lambda(I_{D^j}(b_j)) along a sequence, plus the limit model value."""
    from .invariant import fk_eval

    budget = dict(budget or {})
    steps = scale_sequence(D, points, boundary)
    notes = []
    limit = None
    try:
        limit = limit_model(D, boundary, approach, limit_P)
    except ScalingError as exc:
        notes.append(str(exc))
    out = []
    for s in steps:
        try:
            r = fk_eval(s.domain, s.base_point, **budget)
            gap = None
            if gaps and limit is not None:
                gap, _ = hausdorff_gap(s.domain, limit, s.base_point, N=gap_grid)
            out.append(ScaleStudyStep(s.index, s.eps, s.base_point, r.kernel, r.indicatrix, r.value, r.sigma, gap))
        except Exception as exc:  # reported per step; the study continues
            out.append(ScaleStudyStep(s.index, s.eps, s.base_point, np.nan, np.nan, np.nan, np.nan, None, str(exc)))
    lv = ls = None
    if limit is not None:
        b = np.zeros(D.n, complex)
        b[-1] = -1.0
        try:
            r = fk_eval(limit, b, **budget)
            lv, ls = r.value, r.sigma
        except Exception as exc:
            notes.append(f"limit model evaluation failed: {exc}")
    vals = [s.value for s in out if s.error is None]
    cg = float(np.ptp(vals[-3:]) / max(abs(vals[-1]), 1e-300)) if len(vals) >= 3 else None
    return ScaleStudyResult(D.label, np.asarray(boundary, complex), out, limit.label if limit else None, lv, ls, cg, notes)
