"""Kobayashi-Royden metric: closed forms, affine brackets, extremal polynomial discs, M-metric, indicatrix volume."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, pi
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize
from scipy.special import roots_legendre

from . import domains as dm
from .bergman import KernelError, default_chart, log_monomial_norms, monomial_norm_quadrature
from .core import rng_for, sphere_sample
from .domains import DomainError


class MetricError(RuntimeError):
    pass


def _require_inside(D, z):
    if not dm.contains(D, z):
        raise DomainError("point is outside the domain")


# ------------------------------------------------------------------ eggs

def _egg_axis_metric(mu: float, t: float, a1, a2) -> np.ndarray:
    """k at (0, t) of {|z1|^2 + |z2|^(2 mu) < 1} for directions with moduli (a1, a2).

    Uses the extremal discs of convex complex ellipsoids: the second component either has no
    zero in the disc (r2 = 0) or a single zero at alpha2 = rho e^{i psi}.
    """
    a1 = np.atleast_1d(np.asarray(a1, dtype=float))
    a2 = np.atleast_1d(np.asarray(a2, dtype=float))
    out = np.empty(a1.shape)
    if t <= 1e-6:
        # the root find loses all digits as t -> 0; k differs from the centre gauge by O(t^2)
        for i, (x1, x2) in enumerate(zip(a1, a2)):
            s = max(x1, x2)
            out[i] = 0.0 if s == 0 else s * _minkowski_egg(mu, x1 / s, x2 / s)
        return out
    B0 = t ** (2 * mu)
    for i, (x1, x2) in enumerate(zip(a1, a2)):
        if x1 == 0 and x2 == 0:
            out[i] = 0.0
            continue
        s = max(x1, x2)  # k is homogeneous in v; unit size keeps the products below from underflowing
        out[i] = s * _egg_axis_one(mu, t, B0, x1 / s, x2 / s)
    return out


def _egg_axis_one(mu, t, B0, x1, x2) -> float:
    """One direction of unit size; t > 0."""
    if x2 == 0 or x1 * x1 * t * t >= mu * mu * x2 * x2:
        c2 = (1 - B0) / (x1 * x1 + t ** (2 * mu - 2) * mu * mu * x2 * x2 / (1 - B0))
        return 1.0 / np.sqrt(c2)
    q = (x1 / x2) ** 2
    if q == 0:
        return x2 / (1 - t * t)

    def h(rho):
        B = (t / rho) ** (2 * mu)
        g = -1 / rho + rho * (1 + (B - 1) / mu)
        return (1 - B) * (1 - B * rho * rho) / (t * t * g * g) - q

    rho = brentq(h, t, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200)
    B = (t / rho) ** (2 * mu)
    g = -1 / rho + rho * (1 + (B - 1) / mu)
    return x2 / (t * abs(g))


def _minkowski_egg(mu, x1, x2) -> float:
    if x2 == 0:
        return abs(x1)
    if x1 == 0:
        return abs(x2)
    f = lambda s: x1 * x1 / (s * s) + (x2 / s) ** (2 * mu) - 1
    hi = max(abs(x1), abs(x2)) * 2.0 + 1e-300
    return brentq(f, 1e-300 + max(abs(x1), abs(x2)) * 0.5, hi, xtol=1e-16, rtol=1e-15)


def _egg_to_axis(mu: float, z):
    """Automorphism data moving z in E_2mu to (0, t): returns t and the Jacobian matrix."""
    a, w0 = complex(z[0]), complex(z[1])
    s = 1 - abs(a) ** 2
    t = abs(w0) / s ** (1 / (2 * mu))
    J = np.array([[1 / s, 0], [w0 * np.conj(a) / (mu * s ** (1 / (2 * mu) + 1)), s ** (-1 / (2 * mu))]], dtype=complex)
    return t, J


def egg_metric(mu: float, z, V) -> np.ndarray:
    """k_{E_2mu}(z, v) for rows v of V, by transport to the axis point (0, t)."""
    z = np.asarray(z, dtype=complex).ravel()
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    t, J = _egg_to_axis(mu, z)
    X = V @ J.T
    return _egg_axis_metric(mu, t, np.abs(X[:, 0]), np.abs(X[:, 1]))


def egg_indicatrix_volume(mu: float, z) -> tuple[float, float]:
    """Exact indicatrix volume of E_2mu at z (value, quadrature error estimate)."""
    z = np.asarray(z, dtype=complex).ravel()
    t, J = _egg_to_axis(mu, z)
    det2 = abs(np.linalg.det(J)) ** 2
    if t == 0:
        return float(np.exp(log_monomial_norms(dm.EggC2(mu), np.zeros((1, 2)))[0])) / det2, 0.0
    f = lambda th: _egg_axis_metric(mu, t, [np.cos(th)], [np.sin(th)])[0] ** -4 * np.cos(th) * np.sin(th)
    split = np.arctan(t / mu)
    v1, e1 = quad(f, 0, split, epsabs=0, epsrel=1e-12, limit=200)
    v2, e2 = quad(f, split, pi / 2, epsabs=0, epsrel=1e-12, limit=200)
    return pi**2 * (v1 + v2) / det2, pi**2 * (e1 + e2) / det2


def _as_egg_c2(D):
    """(mu, swap) if D is a two-dimensional egg handled by the exact metric."""
    if isinstance(D, dm.EggC2):
        return float(D.mu), False
    if isinstance(D, dm.EggHi) and D.n == 2:
        return float(D.m), True
    if isinstance(D, dm.Ball) and D.n == 2:
        return 1.0, False
    return None


# --------------------------------------------------------------- closed forms

def has_closed_metric(D) -> bool:
    if isinstance(D, (dm.Disc, dm.PuncturedDisc, dm.Ball, dm.Polydisc, dm.Hartogs, dm.HalfPlaneCorner)):
        return True
    if _as_egg_c2(D) is not None:
        return True
    if isinstance(D, dm.Model):
        return set(D.P.coeffs) == {(1, 1)} or dm.model_as_egg(D) is not None
    if isinstance(D, dm.Product):
        return has_closed_metric(D.left) and has_closed_metric(D.right)
    if isinstance(D, dm.Affine):
        return has_closed_metric(D.base)
    if isinstance(D, dm.Pullback):
        return D.to_base_jac is not None and has_closed_metric(D.base)
    return False


def metric_batch(D, z, V) -> np.ndarray:
    """Closed-form k_D(z, v) for the rows of V."""
    z = np.asarray(z, dtype=complex).ravel()
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    if isinstance(D, dm.Disc):
        return np.abs(V[:, 0]) / (1 - abs(z[0]) ** 2)
    if isinstance(D, dm.PuncturedDisc):
        r = abs(z[0])
        if r == 0:
            raise MetricError("punctured disc metric is undefined at the puncture")
        return np.abs(V[:, 0]) / (2 * r * np.log(1 / r))
    if isinstance(D, dm.Ball):
        s = 1 - float(np.sum(np.abs(z) ** 2))
        return np.sqrt(np.sum(np.abs(V) ** 2, axis=1) / s + np.abs(V @ np.conj(z)) ** 2 / s**2)
    if isinstance(D, dm.Polydisc):
        return np.max(np.abs(V) / (1 - np.abs(z) ** 2), axis=1)
    egg = _as_egg_c2(D)
    if egg is not None:
        mu, swap = egg
        if swap:
            return egg_metric(mu, z[::-1], V[:, ::-1])
        return egg_metric(mu, z, V)
    if isinstance(D, dm.HalfPlaneCorner):
        c = np.array([z[0].imag + D.c1, z[1].imag + D.c2])
        return np.max(np.abs(V) / (2 * c), axis=1)
    if isinstance(D, dm.Hartogs):
        a, b = z
        W = np.stack([V[:, 1] / a - b * V[:, 0] / a**2, V[:, 0]], axis=1)
        return metric_batch(dm.Product(dm.Disc(), dm.PuncturedDisc()), [b / a, a], W)
    if isinstance(D, dm.Product):
        k = D.left.n
        return np.maximum(metric_batch(D.left, z[:k], V[:, :k]), metric_batch(D.right, z[k:], V[:, k:]))
    if isinstance(D, dm.Affine):
        return metric_batch(D.base, D.to_base(z), V / D.scale_vector())
    if isinstance(D, dm.Model) and set(D.P.coeffs) != {(1, 1)} and has_closed_metric(D):
        return metric_batch(dm.model_as_egg(D), z, V)
    if isinstance(D, dm.Model) and has_closed_metric(D):
        # Cayley image of the Siegel half-space is the unit ball
        a = D.P.coeffs[(1, 1)].real
        n = D.n
        zz = z.copy()
        zz[0] *= np.sqrt(a)
        VV = V.copy()
        VV[:, 0] *= np.sqrt(a)
        d = 1 - zz[-1]
        w = np.concatenate([np.sqrt(2) * zz[:-1] / d, [(1 + zz[-1]) / d]])
        J = np.zeros((n, n), complex)
        J[:-1, :-1] = np.eye(n - 1) * np.sqrt(2) / d
        J[:-1, -1] = np.sqrt(2) * zz[:-1] / d**2
        J[-1, -1] = 2 / d**2
        return metric_batch(dm.Ball(n), w, VV @ J.T)
    if isinstance(D, dm.Pullback) and has_closed_metric(D):
        J = D.to_base_jac(z)
        return metric_batch(D.base, D.to_base(z), V @ J.T)
    raise MetricError(f"no closed-form metric for {D.label}")


def kobayashi_closed(D, z, v) -> float:
    z = np.asarray(z, dtype=complex).ravel()
    _require_inside(D, z)
    return float(metric_batch(D, z, np.asarray(v, dtype=complex)[None, :])[0])


# -------------------------------------------------------------- brackets

@dataclass
class Bracket:
    lower: float
    upper: float
    radius: float
    unbounded: bool = False


def affine_radius(D, z, v, angles: int = 256, rmax: float = 1e8) -> float:
    """sup{t : z + lambda v in D for |lambda| < t}, by bisection on circles."""
    z = np.asarray(z, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    e = np.exp(2j * np.pi * (np.arange(angles) + 0.5) / angles)

    def ok(t):
        return bool(np.all(D.inside(z[None, :] + t * e[:, None] * v[None, :])))

    hi = 1.0 / max(np.linalg.norm(v), 1e-300)
    while ok(hi):
        hi *= 2
        if hi > rmax:
            return np.inf
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * hi:
            break
    return lo


def affine_bracket(D, z, v) -> Bracket:
    """For convex D: 1/(2r) <= k_D(z, v) <= 1/r with r the affine-disc radius."""
    if not D.convex:
        raise MetricError("affine bracket needs a convex domain")
    z = np.asarray(z, dtype=complex).ravel()
    _require_inside(D, z)
    if np.allclose(v, 0):
        raise MetricError("zero direction")
    r = affine_radius(D, z, v)
    if np.isinf(r):
        return Bracket(0.0, 0.0, r, True)
    return Bracket(0.5 / r, 1.0 / r, r)


# ------------------------------------------------------------ extremal discs

@dataclass
class DiscCandidate:
    degree: int
    coeffs: np.ndarray  # (degree + 1, n): c_0 = z, c_1 = R v
    R: float

    def __call__(self, lam) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        powers = lam[:, None] ** np.arange(self.degree + 1)[None, :]
        return powers @ self.coeffs


@dataclass
class ExtremalResult:
    metric: float
    disc: DiscCandidate | None
    bracket: Bracket | None
    feasible: bool
    bracket_ok: bool
    warnings: list = field(default_factory=list)


def _squashed(D, F: np.ndarray) -> np.ndarray:
    """rho / (1 + |rho|): same sign, bounded, non-finite values count as outside."""
    with np.errstate(all="ignore"):
        r = D.defining(F)
    r = np.where(np.isfinite(r), r, 1e300)
    return r / (1 + np.abs(r))


def _rho_grad(D, F: np.ndarray, h: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Squashed defining values (M, p) and complex gradients d/dx + i d/dy, shape (M, p, n)."""
    M, n = F.shape
    steps = np.concatenate([np.eye(n), 1j * np.eye(n)]) * h  # (2n, n)
    # one batched call: base points, then +step and -step for every real direction
    Fs = np.concatenate([F[None], F[None] + steps[:, None], F[None] - steps[:, None]]).reshape(-1, n)
    r = _squashed(D, Fs).reshape(1 + 4 * n, M, -1)
    rho = r[0]
    d = (r[1:1 + 2 * n] - r[1 + 2 * n:]) / (2 * h)  # (2n, M, p)
    G = np.moveaxis(d[:n] + 1j * d[n:], 0, -1)
    return rho, G


def extremal_disc(D, z, v, degree: int = 8, samples: int = 64, restarts: int = 16, tol: float = 1e-6,
                  seed: int = 0, outer: int = 6, w0: float = 10.0, init: DiscCandidate | None = None) -> ExtremalResult:
    """Largest R with a polynomial disc f(0) = z, f'(0) = R v inside D at boundary samples.

    Quadratic exterior penalty (weight x10 per outer round) with L-BFGS; the winning disc is
    shrunk towards z until it is feasible at 4x fresh samples, so 1/R is an upper estimate.
    `init` (a disc found for a nearby direction) replaces the second start.
    """
    z = np.asarray(z, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    _require_inside(D, z)
    if np.allclose(v, 0):
        raise MetricError("zero direction")
    n = D.n
    d = max(degree, 1)
    samples = max(samples, 8 * d)  # fewer boundary samples than this let high modes leak out between them
    theta = 2 * np.pi * np.arange(samples) / samples
    E = np.exp(1j * np.outer(theta, np.arange(d + 1)))  # (M, d+1)
    bracket = affine_bracket(D, z, v) if D.convex else None
    r0 = bracket.radius if bracket is not None and not bracket.unbounded else affine_radius(D, z, v)
    if not np.isfinite(r0) or r0 <= 0:
        raise MetricError("affine disc is unbounded; the metric may vanish")
    nfree = 2 * n * (d - 1)
    scale = r0 * max(np.linalg.norm(v), 1e-300)

    def unpack(x):
        R = x[0] * r0
        C = np.zeros((d + 1, n), complex)
        C[0] = z
        C[1] = R * v
        if d > 1:
            c = x[1:].reshape(2, d - 1, n)
            C[2:] = scale * (c[0] + 1j * c[1])
        return R, C

    def objective(x, w):
        R, C = unpack(x)
        F = E @ C
        rho, G = _rho_grad(D, F)
        pos = np.maximum(rho, 0.0)
        val = -x[0] + w * np.sum(pos**2)
        A = np.einsum("mp,mpj->mj", 2 * w * pos, np.conj(G))  # (M, n)
        S = E.T @ A  # (d+1, n): sum_m A_mj e^{i k theta_m}
        grad = np.empty_like(x)
        grad[0] = -1.0 + r0 * float(np.real(np.sum(S[1] * v)))
        if d > 1:
            gre = np.real(S[2:]) * scale
            gim = -np.imag(S[2:]) * scale
            grad[1:] = np.concatenate([gre.ravel(), gim.ravel()])
        return val, grad

    rng = rng_for(seed, 7)
    best = None
    for r in range(max(restarts, 1)):
        x = np.zeros(1 + nfree)
        x[0] = 0.9
        if r == 1 and init is not None and d > 1:
            x[0] = 0.98 * np.linalg.norm(init.coeffs[1]) / (np.linalg.norm(v) * r0)
            m = min(init.degree, d) - 1
            if m > 0:
                c = init.coeffs[2:m + 2] / scale
                x[1:] = np.concatenate([np.pad(c.real, ((0, d - 1 - m), (0, 0))).ravel(),
                                        np.pad(c.imag, ((0, d - 1 - m), (0, 0))).ravel()])
        elif r > 0:
            x[0] = rng.uniform(0.5, 1.0)
            x[1:] = 0.05 * rng.standard_normal(nfree)
        w = w0
        for _ in range(outer):
            res = minimize(objective, x, args=(w,), jac=True, method="L-BFGS-B",
                           options={"maxiter": 2000, "gtol": 1e-12, "ftol": 1e-15})
            x = res.x
            w *= 10
        R, C = unpack(x)
        # repair a slightly infeasible disc: pull it towards z, or restrict it to a smaller
        # parameter disc f(s lambda); keep whichever loses less radius
        s = _shrink_to_feasible(D, z, C, 4 * samples, seed + r)
        t = _shrink_parameter(D, C, 4 * samples, seed + r)
        if s <= 0 and t <= 0:
            continue
        Cf = C.copy()
        if s >= t:
            Cf[1:] *= s
        else:
            Cf *= (t ** np.arange(d + 1))[:, None]
        Rf = max(s, t) * R
        F = _boundary(Cf, 4 * samples)
        slack = float(-np.max(D.defining(F)))
        cand = (Rf, slack, DiscCandidate(d, Cf, Rf))
        if best is None or Rf > best[0] * (1 + 1e-12) or (abs(Rf - best[0]) <= 1e-12 * best[0] and slack < best[1]):
            best = cand
    warn = []
    if best is None:
        warn.append("no feasible disc found; returning the affine upper bound")
        k = 1.0 / r0
        return ExtremalResult(k, None, bracket, False, True, warn)
    k = 1.0 / best[0]
    bracket_ok = True
    if bracket is not None and not bracket.unbounded:
        bracket_ok = bracket.lower - tol <= k <= bracket.upper * (1 + tol) + tol
        if not bracket_ok:
            warn.append("extremal estimate outside the affine bracket: convergence failure")
    return ExtremalResult(k, best[2], bracket, True, bracket_ok, warn)


@lru_cache(maxsize=64)
def _circle_powers(count: int, terms: int, offset: float) -> np.ndarray:
    th = 2 * np.pi * (np.arange(count) + offset) / count
    E = np.exp(1j * np.outer(th, np.arange(terms)))
    E.flags.writeable = False
    return E


def _boundary(C: np.ndarray, count: int, offset: float = 0.5) -> np.ndarray:
    return _circle_powers(count, C.shape[0], float(offset)) @ C


def _shrink_parameter(D, C, count: int, seed: int) -> float:
    """Largest t in [0, 1] with f(t e^{i theta}) inside D at `count` fresh angles."""
    g = np.random.default_rng(seed)
    off = g.uniform(0.1, 0.9)
    powers = np.arange(C.shape[0])

    def ok(t):
        Ct = C * (t ** powers)[:, None]
        # interior rings too: the circle alone decides only when rho is plurisubharmonic
        rings = [_boundary(Ct * (q ** powers)[:, None], count // 4, off) for q in (0.5, 0.8)]
        F = np.concatenate([_boundary(Ct, count, off), _boundary(Ct, count // 4, 0.0), *rings])
        return bool(np.all(D.inside(F)))

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(45):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _shrink_to_feasible(D, z, C, count: int, seed: int) -> float:
    """Largest s in [0, 1] with z + s (f - z) inside D at `count` fresh boundary samples."""
    g = np.random.default_rng(seed)
    F = _boundary(C, count, offset=g.uniform(0.1, 0.9))
    F0 = np.concatenate([F, _boundary(C, count // 4, 0.0)])

    def ok(s):
        return bool(np.all(D.inside(z + s * (F0 - z))))

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def kobayashi_extremal(D, z, v, **kw) -> float:
    return extremal_disc(D, z, v, **kw).metric


def chart_jacobian(chart, z, h: float = 1e-6) -> np.ndarray:
    """Complex Jacobian of a holomorphic chart map by central differences along real axes."""
    z = np.asarray(z, dtype=complex).ravel()
    cols = []
    for j in range(z.size):
        e = np.zeros(z.size, complex)
        e[j] = h
        cols.append((chart.to_w((z + e)[None, :])[0] - chart.to_w((z - e)[None, :])[0]) / (2 * h))
    return np.stack(cols, axis=1)


@dataclass(frozen=True, eq=False)
class ChartImage(dm.Domain):
    """Image of a domain in a compactifying chart, as a subset of the chart polydisc.

    The pulled-back defining function jumps where the chart sends the circle to infinity, so
    outside the polydisc only the smooth polydisc constraint is kept.
    """

    base: dm.Domain = None
    chart: object = None

    @property
    def n(self):
        return self.base.n

    @property
    def bounded(self):
        return True

    def _rho(self, W):
        W = np.asarray(W, dtype=complex)
        box = np.abs(W) ** 2 / np.asarray(self.chart.w_radii) ** 2 - 1.0
        with np.errstate(all="ignore"):
            pull = self.base._rho(self.chart.from_w(W))
        pull = np.where(np.isfinite(pull), pull, 1e300)
        pull = pull / (1 + np.abs(pull))
        outside = np.any(box >= 0, axis=-1, keepdims=True)
        return np.concatenate([box, np.where(outside, -1.0, pull)], axis=-1)

    @property
    def label(self):
        return f"chart({self.base.label})"


def chart_domain(D, chart) -> ChartImage:
    return ChartImage(D, chart)


def extremal_in_chart(D, z, v, chart=None, **kw) -> ExtremalResult:
    """Extremal disc problem moved to a compactifying chart (k is invariant under the chart map).

    Unbounded catalog domains (corners, Siegel-type pieces, models) become bounded there, where
    polynomial discs approximate the extremals far better than in the original coordinates.
    """
    z = np.asarray(z, dtype=complex).ravel()
    if chart is None:
        try:
            chart = default_chart(D)
        except KernelError:
            return extremal_disc(D, z, v, **kw)
    w = chart.to_w(z[None, :])[0]
    u = chart_jacobian(chart, z) @ np.asarray(v, dtype=complex).ravel()
    return extremal_disc(chart_domain(D, chart), w, u, **kw)


# ------------------------------------------------------------------ M-metric

def m_metric(NF, zeta, v) -> tuple[float, float]:
    """sum_k |(DPhi(zeta) v)_k| / tau_k(zeta, eps) and its l-infinity variant.

    zeta is an interior point on the normal line below NF.zeta: zeta = NF.zeta - ('0, eps).
    """
    from .scaling import phi_jacobian, tau_vector

    zeta = np.asarray(zeta, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    diff = NF.zeta - zeta
    if np.any(np.abs(diff[:-1]) > 1e-9) or abs(diff[-1].imag) > 1e-9 or diff[-1].real <= 0:
        raise MetricError("eps(zeta) is not computable: point is not on the inner normal line")
    eps = float(diff[-1].real)
    u = phi_jacobian(NF, zeta) @ v
    t = tau_vector(NF, eps)
    terms = np.abs(u) / t
    return float(terms.sum()), float(terms.max())


@dataclass
class ComparabilityStats:
    ratios: np.ndarray
    lo: float
    hi: float
    C_star: float


def comparability_probe(D, boundary_points, eps_values, directions, metric: Callable | None = None) -> ComparabilityStats:
    """k/M ratios over probes zeta = p - ('0, eps) (paper coordinates) below boundary points p."""
    from .scaling import chart_for, normal_form

    ratios = []
    for p in boundary_points:
        ch = chart_for(D, p)
        for eps in eps_values:
            xb = ch.to_paper(np.asarray(p, complex))
            NF = normal_form(ch, xb)
            zx = xb - np.eye(D.n)[-1] * eps
            z = ch.from_paper(zx)
            for u in directions:
                u = np.asarray(u, dtype=complex)
                vz = ch.from_paper(u)
                k = metric(D, z, vz) if metric else kobayashi_closed(D, z, vz)
                M, _ = m_metric(NF, zx, u)
                ratios.append(k / M)
    ratios = np.asarray(ratios)
    lo, hi = float(ratios.min()), float(ratios.max())
    return ComparabilityStats(ratios, lo, hi, max(hi, 1.0 / lo))


# ---------------------------------------------------------- indicatrix volume

@dataclass
class IndicatrixEstimate:
    volume: float
    stderr: float
    samples: int
    method: str
    directions: np.ndarray | None = None
    values: np.ndarray | None = None


def sphere_area(n: int) -> float:
    return 2 * pi**n / factorial(n - 1)


def _metric_function(D, z, metric: str, solver_kw: dict) -> tuple[Callable, str]:
    if metric in ("auto", "closed") and has_closed_metric(D):
        return (lambda V: metric_batch(D, z, V)), "closed"
    if metric == "closed":
        raise MetricError(f"no closed-form metric for {D.label}")
    if metric == "bracket":
        return (lambda V: np.array([affine_bracket(D, z, v).upper for v in V])), "bracket-upper"

    one = extremal_disc if D.bounded else extremal_in_chart

    def solve(V):
        # sweep the polar angle at each relative phase, warm-starting from the previous disc
        V = np.asarray(V, dtype=complex)
        th = np.arctan2(np.abs(V[:, 1]), np.abs(V[:, 0]))
        ph = np.round(np.angle(V[:, 1] * np.conj(V[:, 0])), 9) if V.shape[1] == 2 else np.zeros(len(V))
        out = np.empty(len(V))
        prev, last = None, None
        for i in np.lexsort((th, ph)):
            warm = prev if last == ph[i] else None
            r = one(D, z, V[i], **solver_kw, init=warm)
            out[i], prev, last = r.metric, r.disc, ph[i]
        return out

    return solve, "extremal"


def _product_nodes(nt: int, npsi: int, breaks=(), even: bool = False):
    """Directions and weights on S^3: Gauss-Legendre in the polar angle (one panel per
    interval between breaks) times equispaced relative phase.  `even`: the integrand is
    even in the phase, so only phases in [0, pi] are kept (npsi rounded up to even)."""
    edges = [0.0, *sorted(b for b in breaks if 0 < b < pi / 2), pi / 2]
    per = max(nt // (len(edges) - 1), 1)
    x, w = roots_legendre(per)
    th = np.concatenate([a + (x + 1) * (b - a) / 2 for a, b in zip(edges, edges[1:])])
    wt = np.concatenate([w * (b - a) / 2 for a, b in zip(edges, edges[1:])])
    if even:
        npsi += npsi % 2
        psi = 2 * pi * np.arange(npsi // 2 + 1) / npsi
        wp = np.full(len(psi), 2.0)
        wp[0] = wp[-1] = 1.0
        wp *= 2 * pi / npsi
    else:
        psi = 2 * pi * np.arange(npsi) / npsi
        wp = np.full(npsi, 2 * pi / npsi)
    T, Ps = np.meshgrid(th, psi, indexing="ij")
    V = np.stack([np.cos(T).ravel() + 0j, np.sin(T).ravel() * np.exp(1j * Ps.ravel())], axis=1)
    W = (wt[:, None] * np.cos(th)[:, None] * np.sin(th)[:, None] * wp[None, :]).ravel()
    return V, W


def _phase_even(D, z, count: int = 4000) -> bool:
    """True when D is invariant under z -> -conj(z) and z is fixed by it.

    Then k(z, (v1, v2)) = k(z, (v1, e^{-i psi} |v2|)) for v2 = e^{i psi}|v2|, v1 > 0, so the
    phase integrand is even.  Checked on random points around z.
    """
    if not np.allclose(z, -np.conj(z), atol=1e-14):
        return False
    g = np.random.default_rng(12345)
    Z = z + (1 + np.abs(z)) * (g.normal(size=(count, len(z))) + 1j * g.normal(size=(count, len(z))))
    try:
        return bool(np.array_equal(D.inside(Z), D.inside(-np.conj(Z))))
    except (FloatingPointError, ValueError):
        return False


def _polar_kink(D, z, grid: int = 97, spike: float = 25.0) -> tuple:
    """Polar angle where the affine-radius profile has a corner, if any.

    On domains cut out by several constraints the metric switches between them along a
    curve; the affine radius switches at (nearly) the same angle and costs no disc solves.
    """
    th = np.linspace(0, pi / 2, grid + 2)[1:-1]
    try:
        g = np.log([affine_radius(D, z, np.array([np.cos(t), np.sin(t)]), angles=128) for t in th])
    except (FloatingPointError, ValueError):
        return ()
    if not np.all(np.isfinite(g)):
        return ()
    d2 = np.abs(g[:-2] - 2 * g[1:-1] + g[2:])
    i = int(np.argmax(d2))
    if d2[i] <= spike * (np.median(d2) + 1e-12):
        return ()
    # refine the corner as the crossing of the two one-sided linear fits
    lo, hi = max(i - 3, 0), min(i + 6, grid)
    a1, b1 = np.polyfit(th[lo:i + 1], g[lo:i + 1], 1) if i + 1 - lo >= 2 else (0.0, g[i])
    a2, b2 = np.polyfit(th[i + 2:hi], g[i + 2:hi], 1) if hi - i - 2 >= 2 else (0.0, g[i + 2])
    t = (b2 - b1) / (a1 - a2) if a1 != a2 else th[i + 1]
    return (float(np.clip(t, th[i], th[i + 2])),)


def indicatrix_volume(D, z, mode: str = "auto", metric: str = "auto", samples: int = 20000, seed: int = 0,
                      nodes: tuple = (64, 64), solver_kw: dict | None = None, keep: bool = False) -> IndicatrixEstimate:
    """lambda(I) = (1/(2n)) int_{S^{2n-1}} k(z, w)^(-2n) dsigma(w).

    mode "auto" uses an exact volume when one exists (closed indicatrix, or the domain itself
    at the centre of a balanced domain) and quadrature otherwise.  Quadrature: equispaced
    angles for n = 1; for n = 2 Gauss-Legendre in the polar angle times equispaced relative
    phase ("product", error from a half-resolution rerun); "mc" uses uniform directions and
    the sample variance.  metric picks the source of k: closed, extremal discs or the affine
    upper bound.
    """
    z = np.asarray(z, dtype=complex).ravel()
    _require_inside(D, z)
    n = D.n
    solver_kw = solver_kw or {}
    if mode in ("auto", "balanced") and D.balanced and np.allclose(z, 0) and D.bounded:
        return IndicatrixEstimate(domain_volume(D), 0.0, 0, "balanced-center")
    if mode in ("auto", "closed") and has_closed_indicatrix(D):
        val, err = indicatrix_closed(D, z)
        return IndicatrixEstimate(val, err, 0, "closed")
    if mode == "closed":
        raise MetricError(f"no closed-form indicatrix for {D.label}")
    f, how = _metric_function(D, z, metric, solver_kw)
    if n == 1:
        M = min(samples, 256)
        V = sphere_sample(1, M, mode="angles")
        k = f(V)
        full = 0.5 * 2 * pi * np.mean(k**-2.0)
        half = 0.5 * 2 * pi * np.mean(k[::2] ** -2.0)
        return IndicatrixEstimate(float(full), float(abs(full - half)), M, how + "-angles",
                                  V if keep else None, k if keep else None)
    if n == 2 and mode != "mc":
        nt, npsi = nodes
        breaks = () if how == "closed" else _polar_kink(D, z)
        even = how != "closed" and _phase_even(D, z)
        V, W = _product_nodes(nt, npsi, breaks, even)
        k = f(V)
        full = 0.25 * float(np.sum(W * k**-4.0)) * 2 * pi
        V2, W2 = _product_nodes(max(nt // 2, 2), max(npsi // 2, 1), breaks, even)
        half = 0.25 * float(np.sum(W2 * f(V2) ** -4.0)) * 2 * pi
        err = abs(full - half)
        if how == "extremal":
            err += 2 * n * full * _solver_bias(D, z, V, k, solver_kw)
        return IndicatrixEstimate(full, err, len(V), how + "-product",
                                  V if keep else None, k if keep else None)
    V = sphere_sample(n, samples, seed)
    k = f(V)
    vals = k ** (-2.0 * n) * sphere_area(n) / (2 * n)
    return IndicatrixEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals))), len(vals),
                              how + "-mc", V if keep else None, k if keep else None)


def _solver_bias(D, z, V, k, solver_kw: dict, probes: int = 4) -> float:
    """Relative change of k when the disc degree is halved, at a few nodes (conservative)."""
    deg = solver_kw.get("degree", 8)
    kw = dict(solver_kw, degree=max(deg // 2, 1))
    idx = np.linspace(0, len(V) - 1, min(probes, len(V))).astype(int)
    solve = extremal_disc if D.bounded else extremal_in_chart
    return max(abs(solve(D, z, V[i], **kw).metric / k[i] - 1) for i in idx)


def has_closed_indicatrix(D) -> bool:
    if isinstance(D, (dm.Disc, dm.PuncturedDisc, dm.Ball, dm.Polydisc, dm.HalfPlaneCorner, dm.Hartogs)):
        return True
    if _as_egg_c2(D) is not None:
        return True
    if isinstance(D, dm.Model):
        return dm.model_as_egg(D) is not None
    if isinstance(D, dm.Product):
        return has_closed_indicatrix(D.left) and has_closed_indicatrix(D.right)
    if isinstance(D, dm.Affine):
        return has_closed_indicatrix(D.base)
    if isinstance(D, dm.Pullback):
        return D.to_base_jac is not None and has_closed_indicatrix(D.base)
    return False


def indicatrix_closed(D, z) -> tuple[float, float]:
    """Exact indicatrix volume (value, absolute error bound from any inner quadrature).

    Products multiply, and a biholomorphic image divides by |det G'|^2 since the indicatrix
    is carried linearly by the derivative.
    """
    z = np.asarray(z, dtype=complex).ravel()
    _require_inside(D, z)
    if isinstance(D, dm.Disc):
        return pi * (1 - abs(z[0]) ** 2) ** 2, 0.0
    if isinstance(D, dm.PuncturedDisc):
        r = abs(z[0])
        if r == 0:
            raise MetricError("punctured disc metric is undefined at the puncture")
        return pi * (2 * r * np.log(1 / r)) ** 2, 0.0
    if isinstance(D, dm.Ball):
        s = 1 - float(np.sum(np.abs(z) ** 2))
        return pi**D.n / factorial(D.n) * s ** (D.n + 1), 0.0
    if isinstance(D, dm.Polydisc):
        return float(np.prod(pi * (1 - np.abs(z) ** 2) ** 2)), 0.0
    if isinstance(D, dm.HalfPlaneCorner):
        return pi**2 * (2 * (z[0].imag + D.c1)) ** 2 * (2 * (z[1].imag + D.c2)) ** 2, 0.0
    egg = _as_egg_c2(D)
    if egg is not None:
        mu, swap = egg
        if mu == 1:
            return indicatrix_closed(dm.Ball(2), z)
        return egg_indicatrix_volume(mu, z[::-1] if swap else z)
    if isinstance(D, dm.Hartogs):
        a, b = z
        base = dm.Product(dm.Disc(), dm.PuncturedDisc())
        v, e = indicatrix_closed(base, [b / a, a])
        # G(z, w) = (w/z, z) has |det G'| = 1/|z|
        return v * abs(a) ** 2, e * abs(a) ** 2
    if isinstance(D, dm.Product):
        k = D.left.n
        v1, e1 = indicatrix_closed(D.left, z[:k])
        v2, e2 = indicatrix_closed(D.right, z[k:])
        return v1 * v2, v1 * e2 + v2 * e1
    if isinstance(D, dm.Affine):
        f = float(np.prod(np.abs(D.scale_vector()) ** 2))
        v, e = indicatrix_closed(D.base, D.to_base(z))
        return v * f, e * f
    if isinstance(D, dm.Model) and dm.model_as_egg(D) is not None:
        return indicatrix_closed(dm.model_as_egg(D), z)
    if isinstance(D, dm.Pullback) and has_closed_indicatrix(D):
        d2 = abs(np.linalg.det(D.to_base_jac(z))) ** 2
        v, e = indicatrix_closed(D.base, D.to_base(z))
        return v / d2, e / d2
    raise MetricError(f"no closed-form indicatrix for {D.label}")


def domain_volume(D) -> float:
    """Volume of a bounded balanced catalog domain (equal to its indicatrix at the centre)."""
    if isinstance(D, dm.Disc):
        return pi
    if isinstance(D, dm.Polydisc):
        return pi**D.n
    if isinstance(D, dm.Product):
        return domain_volume(D.left) * domain_volume(D.right)
    if isinstance(D, (dm.Ball, dm.EggC2, dm.EggHi)):
        return float(np.exp(log_monomial_norms(D, np.zeros((1, D.n)))[0]))
    raise MetricError(f"no volume formula for {D.label}")


def domain_volume_quadrature(D) -> float:
    """Independent radial quadrature of the volume (two-dimensional eggs and balls)."""
    return monomial_norm_quadrature(D, (0, 0))


def write_direction_csv(path, est: IndicatrixEstimate) -> None:
    if est.directions is None:
        raise MetricError("estimate was computed without keep=True")
    n = est.directions.shape[1]
    with open(path, "w", newline="") as fh:
        cols = [f"re_v{j+1},im_v{j+1}" for j in range(n)]
        fh.write(",".join(cols) + ",k\n")
        for v, k in zip(est.directions, est.values):
            parts = [f"{x:.17g}" for c in v for x in (c.real, c.imag)]
            fh.write(",".join(parts) + f",{k:.17g}\n")
