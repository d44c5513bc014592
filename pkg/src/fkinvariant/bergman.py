"""Bergman kernel on the diagonal: closed forms, Reinhardt series, truncated-Gram estimates, convergence experiment."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, factorial, pi
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln
from scipy.stats import qmc

from . import domains as dm
from .domains import DomainError


class KernelError(RuntimeError):
    pass


def _require_inside(D, z):
    if not dm.contains(D, z):
        raise DomainError("point is outside the domain")


# ---------------------------------------------------------------- closed forms

def _egg_kernel(exps: Sequence[float], z: np.ndarray) -> float:
    """Exact kernel of {sum |z_j|^(2 p_j) < 1} when at most one exponent differs from 1.

    Sums the unit-exponent coordinates in closed form (negative binomial series) and the
    remaining one through sum_a (beta_a)_n u^a, written in the binomial basis C(a+k, k).
    """
    exps = [float(p) for p in exps]
    n = len(exps)
    odd = [j for j, p in enumerate(exps) if p != 1.0]
    if len(odd) > 1:
        raise KernelError("exact egg kernel needs all but one exponent equal to 1")
    if not odd:
        return factorial(n) / (pi**n * (1 - float(np.sum(np.abs(z) ** 2))) ** (n + 1))
    i = odd[0]
    m = exps[i]
    X = float(np.sum(np.abs(np.delete(z, i)) ** 2))
    s = 1.0 - X
    u = abs(z[i]) ** 2 / s ** (1.0 / m)
    # (beta)_n with beta = (a+1)/m is a degree-n polynomial in a; expand in C(a+k, k)
    a = np.arange(n + 1, dtype=float)
    vals = np.array([np.prod([(ak + 1) / m + r for r in range(n)]) for ak in a])
    Bm = np.array([[comb(int(ak) + k, k) for k in range(n + 1)] for ak in a], dtype=float)
    coef = np.linalg.solve(Bm, vals)
    total = sum(c / (1 - u) ** (k + 1) for k, c in enumerate(coef))
    return float(m / pi**n * s ** (-n - 1.0 / m) * total)


def _siegel_kernel(D: dm.Model, z) -> float:
    # 2 Re z_n + a|z_1|^2 + sum |z_j|^2 < 0 is a dilate of the Siegel half-space, whose
    # Cayley image is the unit ball: K = a n!/(pi^n (-r)^(n+1))
    a = D.P.coeffs[(1, 1)].real
    r = float(D.defining(z)[0])
    return a * factorial(D.n) / (pi**D.n * (-r) ** (D.n + 1))


def has_closed_kernel(D) -> bool:
    if isinstance(D, (dm.Disc, dm.PuncturedDisc, dm.Ball, dm.Polydisc, dm.Hartogs, dm.HalfPlaneCorner)):
        return True
    if isinstance(D, dm.EggC2):
        return True
    if isinstance(D, dm.EggHi):
        return True
    if isinstance(D, dm.Model):
        return set(D.P.coeffs) == {(1, 1)} or dm.model_as_egg(D) is not None
    if isinstance(D, dm.Product):
        return has_closed_kernel(D.left) and has_closed_kernel(D.right)
    if isinstance(D, dm.Affine):
        return has_closed_kernel(D.base)
    if isinstance(D, dm.Pullback):
        return D.to_base_jac is not None and has_closed_kernel(D.base)
    return False


def bergman_closed(D, z) -> float:
    """Exact K_D(z) on the diagonal for the closed-form part of the catalog."""
    z = np.asarray(z, dtype=complex).ravel()
    _require_inside(D, z)
    if isinstance(D, (dm.Disc, dm.PuncturedDisc)):
        return 1.0 / (pi * (1 - abs(z[0]) ** 2) ** 2)
    if isinstance(D, dm.Ball):
        return factorial(D.n) / (pi**D.n * (1 - float(np.sum(np.abs(z) ** 2))) ** (D.n + 1))
    if isinstance(D, dm.Polydisc):
        return float(np.prod(1.0 / (pi * (1 - np.abs(z) ** 2) ** 2)))
    if isinstance(D, dm.EggC2):
        return _egg_kernel(D.exponents, z)
    if isinstance(D, dm.EggHi):
        return _egg_kernel(D.exponents, z)
    if isinstance(D, dm.HalfPlaneCorner):
        return 1.0 / (16 * pi**2 * (z[0].imag + D.c1) ** 2 * (z[1].imag + D.c2) ** 2)
    if isinstance(D, dm.Hartogs):
        # phi(z, w) = (w/z, z) onto disc x punctured disc, |det phi'|^2 = 1/|z|^2
        a, b = z
        return bergman_closed(dm.Disc(), [b / a]) * bergman_closed(dm.PuncturedDisc(), [a]) / abs(a) ** 2
    if isinstance(D, dm.Product):
        k = D.left.n
        return bergman_closed(D.left, z[:k]) * bergman_closed(D.right, z[k:])
    if isinstance(D, dm.Affine):
        return bergman_closed(D.base, D.to_base(z)) / float(np.prod(np.abs(D.scale_vector()) ** 2))
    if isinstance(D, dm.Model) and set(D.P.coeffs) == {(1, 1)}:
        return _siegel_kernel(D, z)
    if isinstance(D, dm.Model) and has_closed_kernel(D):
        return bergman_closed(dm.model_as_egg(D), z)
    if isinstance(D, dm.Pullback) and has_closed_kernel(D):
        J = np.linalg.det(D.to_base_jac(z))
        return bergman_closed(D.base, D.to_base(z)) * abs(J) ** 2
    raise KernelError(f"no closed-form kernel for {D.label}")


# ------------------------------------------------------------- monomial norms

def _reinhardt_exponents(D) -> tuple[float, ...]:
    if isinstance(D, (dm.EggC2, dm.EggHi)):
        return D.exponents
    if isinstance(D, dm.Ball):
        return (1.0,) * D.n
    if isinstance(D, dm.Disc):
        return (1.0,)
    raise KernelError(f"{D.label} is not a generalized egg")


def log_monomial_norms(D, alphas: np.ndarray) -> np.ndarray:
    """log ||z^alpha||^2 for rows of alphas (shape (N, n))."""
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    if np.any(alphas < 0):
        raise ValueError("multi-index must be non-negative")
    if isinstance(D, dm.Polydisc):
        return np.sum(np.log(pi) - np.log(alphas + 1), axis=1)
    p = np.asarray(_reinhardt_exponents(D))
    beta = (alphas + 1) / p
    return D.n * np.log(pi) + np.sum(gammaln(beta) - np.log(p), axis=1) - gammaln(1 + beta.sum(axis=1))


def monomial_norm_egg(D, alpha, log: bool = False) -> float:
    """||z^alpha||^2 on a complete Reinhardt egg; log=True returns the log (no overflow)."""
    v = float(log_monomial_norms(D, np.asarray(alpha)[None, :])[0])
    if log:
        return v
    if v > 700:
        raise OverflowError("norm overflows; request log=True")
    return float(np.exp(v))


def monomial_norm_quadrature(D, alpha) -> float:
    """Independent radial quadrature of ||z^alpha||^2 for two-dimensional eggs and balls."""
    p = _reinhardt_exponents(D)
    if len(p) != 2:
        raise KernelError("quadrature oracle is two-dimensional")
    a, b = alpha
    p1, p2 = p

    def inner(r1):
        top = (1 - r1 ** (2 * p1)) ** (1 / (2 * p2))
        return r1 ** (2 * a + 1) * top ** (2 * b + 2) / (2 * b + 2)

    val, _ = quad(inner, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    return 4 * pi**2 * val


@dataclass(frozen=True)
class MonomialNormTable:
    domain_id: str
    degree: int
    alphas: np.ndarray
    log_norms: np.ndarray
    VERSION = 1

    @classmethod
    def build(cls, D, degree: int) -> "MonomialNormTable":
        alphas = np.array([a for s in range(degree + 1) for a in _shell(D.n, s)], dtype=float)
        return cls(D.label, degree, alphas, log_monomial_norms(D, alphas))

    def save(self, path) -> None:
        np.savez(path, version=self.VERSION, domain_id=self.domain_id, degree=self.degree,
                 alphas=self.alphas, log_norms=self.log_norms)

    @classmethod
    def load(cls, path, domain_id: str, degree: int) -> "MonomialNormTable | None":
        """Cached table, or None when the key (version, domain, degree) does not match."""
        try:
            f = np.load(path, allow_pickle=False)
        except (OSError, ValueError):
            return None
        if int(f["version"]) != cls.VERSION or str(f["domain_id"]) != domain_id or int(f["degree"]) != degree:
            return None
        return cls(domain_id, degree, f["alphas"], f["log_norms"])


def _shell(n: int, s: int):
    if n == 1:
        yield (s,)
        return
    for a in range(s + 1):
        for rest in _shell(n - 1, s - a):
            yield (a,) + rest


# --------------------------------------------------------------- series path

@dataclass
class SeriesResult:
    value: float
    tail: float
    degree: int
    converged: bool


def bergman_reinhardt(D, z, tol: float = 1e-12, degree_cap: int = 120) -> SeriesResult:
    """sum_alpha |z^alpha|^2/||z^alpha||^2 by shells of total degree, ratio-test tail bound."""
    if not D.reinhardt or not D.bounded:
        raise KernelError("series path needs a bounded complete Reinhardt domain")
    z = np.asarray(z, dtype=complex).ravel()
    _require_inside(D, z)
    logabs = np.log(np.where(np.abs(z) > 0, np.abs(z) ** 2, 1.0))
    zero = np.abs(z) == 0
    shells: list[float] = []
    total = 0.0
    tail = np.inf
    for s in range(degree_cap + 1):
        al = np.array(list(_shell(D.n, s)), dtype=float)
        al = al[~np.any(al[:, zero] > 0, axis=1)] if zero.any() else al
        if len(al) == 0:
            S = 0.0
        else:
            S = float(np.sum(np.exp(al @ logabs - log_monomial_norms(D, al))))
        shells.append(S)
        total += S
        if S == 0.0 and s > 0 and all(x == 0.0 for x in shells[1:]):
            # only the constant term survives (z = 0)
            tail = 0.0
            if s >= 1:
                break
            continue
        if s >= 10:
            last = np.array(shells[-11:])
            r = float(np.max(last[1:] / np.maximum(last[:-1], 1e-300)))
            tail = S * r / (1 - r) if r < 1 else np.inf
            if tail < tol * total:
                return SeriesResult(total, tail, s, True)
    return SeriesResult(total, tail, len(shells) - 1, tail < tol * total)


# ---------------------------------------------------------- truncated / Gram

@dataclass(frozen=True)
class Chart:
    """Biholomorphic chart w = to_w(z) sending the domain into the polydisc of radii w_radii."""

    to_w: Callable
    from_w: Callable
    jac_det: Callable
    w_radii: tuple

    @staticmethod
    def identity(radii) -> "Chart":
        return Chart(lambda Z: np.asarray(Z, dtype=complex), lambda W: W,
                     lambda Z: np.ones(np.asarray(Z).shape[:-1]), tuple(radii))


def _cayley_corner(c1: float, c2: float) -> Chart:
    # half-plane {Im z > -c} -> unit disc, w = z/(z + 2ic)
    c = np.array([c1, c2])

    def to_w(Z):
        Z = np.asarray(Z, dtype=complex)
        return Z / (Z + 2j * c)

    def from_w(W):
        return 2j * c * W / (1 - W)

    def jac(Z):
        Z = np.asarray(Z, dtype=complex)
        return np.prod(2j * c / (Z + 2j * c) ** 2, axis=-1)

    return Chart(to_w, from_w, jac, (1.0, 1.0))


def _cayley_siegel(D: dm.Model) -> Chart:
    n = D.n

    def to_w(Z):
        Z = np.asarray(Z, dtype=complex)
        d = 1 - Z[..., -1:]
        return np.concatenate([np.sqrt(2) * Z[..., :-1] / d, (1 + Z[..., -1:]) / d], axis=-1)

    def from_w(W):
        W = np.asarray(W, dtype=complex)
        zn = (W[..., -1:] - 1) / (W[..., -1:] + 1)
        return np.concatenate([W[..., :-1] * (1 - zn) / np.sqrt(2), zn], axis=-1)

    def jac(Z):
        Z = np.asarray(Z, dtype=complex)
        return np.sqrt(2) ** (n - 1) * 2 / (1 - Z[..., -1]) ** (n + 1)

    # bound |w_1| on the image: |w_1|^2 <= 2|z_1|^2/(1 + P(z_1)/2)^2 with |1 - z_n| >= 1 - Re z_n
    r = np.linspace(0, 50, 20001)
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    V = r[:, None] * np.exp(1j * th)[None, :]
    Pv = np.maximum(D.P.eval_raw(V).real, 0)
    w1 = float(np.max(np.sqrt(2) * np.abs(V) / (1 + Pv / 2)))
    radii = (max(w1, np.sqrt(2)) * 1.05,) * (n - 1) + (1.0,)
    return Chart(to_w, from_w, jac, radii)


def default_chart(D) -> Chart:
    if isinstance(D, dm.Truncated):
        return default_chart(D.base) if not D.base.bounded else default_chart(D.base)
    if isinstance(D, dm.HalfPlaneCorner):
        return _cayley_corner(D.c1, D.c2)
    if isinstance(D, dm.SiegelCorner):
        qmin = _quadratic_min(D.Q1) / D.m**2
        return _cayley_corner(1.0 - min(qmin, 0.0), 1.0)
    if isinstance(D, dm.PolyhedralC2):
        c = [1.0, 1.0]
        for p in D.pieces:
            c[p.sigma] = max(1e-3, -_quadratic_min(p.Q))
        if len(D.pieces) < 2:
            raise KernelError("single-piece polyhedral domains have no corner chart")
        return _cayley_corner(*c)
    if isinstance(D, dm.Model):
        return _cayley_siegel(D)
    if D.bounded:
        R = _bounding_radius(D)
        return Chart.identity((R,) * D.n)
    raise KernelError(f"no chart for {D.label}")


def _quadratic_min(Q) -> float:
    piece = dm.QuadraticPiece(0, Q)
    H, g, c = piece.real_form()
    h, gg = H[2:, 2:], g[2:]
    if np.any(np.linalg.eigvalsh(h) <= 0):
        raise KernelError("quadratic is not strictly convex")
    x = np.linalg.solve(h, -gg)
    return float(0.5 * x @ h @ x + gg @ x + c)


def _bounding_radius(D) -> float:
    if isinstance(D, (dm.Disc, dm.PuncturedDisc, dm.Ball)):
        return 1.0
    if isinstance(D, (dm.EggC2, dm.EggHi)):
        return float(np.sqrt(D.n))
    if isinstance(D, dm.Intersection):
        return min(_bounding_radius(p) for p in D.parts if p.bounded)
    if isinstance(D, dm.Truncated):
        return D.R
    if isinstance(D, dm.Polydisc):
        return float(np.sqrt(D.n))
    if isinstance(D, dm.Affine):
        return float(np.linalg.norm(D.shift_vector()) + np.abs(D.scale_vector()).max() * _bounding_radius(D.base))
    raise KernelError(f"no bounding polydisc for {D.label}")


@dataclass
class GramKernel:
    value: float
    condition: float
    basis_size: int
    points_inside: int


@dataclass
class _GramData:
    chart: Chart
    W: np.ndarray
    Z: np.ndarray
    weight: float
    alphas: np.ndarray


def _sample_chart(D, chart: Chart, points: int, seed: int) -> tuple[np.ndarray, np.ndarray, float]:
    n = D.n
    sob = qmc.Sobol(2 * n, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(points)))
    U = sob.random_base2(m)
    radii = np.asarray(chart.w_radii, dtype=float)
    W = radii * np.sqrt(U[:, :n]) * np.exp(2j * np.pi * U[:, n:])
    weight = float(np.prod(pi * radii**2)) / len(U)
    with np.errstate(all="ignore"):
        Z = chart.from_w(W)
    ok = np.all(np.isfinite(Z), axis=1)
    return W[ok], Z[ok], weight


def _basis(W: np.ndarray, alphas: np.ndarray, radii) -> np.ndarray:
    Ws = W / np.asarray(radii)
    out = np.ones((W.shape[0], len(alphas)), dtype=complex)
    for j in range(W.shape[1]):
        powers = Ws[:, j : j + 1] ** np.arange(int(alphas[:, j].max()) + 1)[None, :]
        out *= powers[:, alphas[:, j].astype(int)]
    return out


def _gram_eval(Phi: np.ndarray, phi0: np.ndarray, weight: float) -> tuple[float, float]:
    G = weight * (Phi.conj().T @ Phi)
    lam, U = np.linalg.eigh(G)
    keep = lam > lam.max() * 1e-13
    c = U[:, keep].conj().T @ phi0
    val = float(np.sum(np.abs(c) ** 2 / lam[keep]))
    return val, float(lam.max() / max(lam[keep].min(), 1e-300))


def bergman_gram(D, z, degree: int = 8, points: int = 2**20, seed: int = 0, chart: Chart | None = None) -> GramKernel:
    """K_D(z) from a polynomial basis in a chart, Gram matrix by scrambled Sobol quadrature."""
    z = np.asarray(z, dtype=complex).ravel()
    _require_inside(D, z)
    chart = chart or default_chart(D)
    W, Z, weight = _sample_chart(D, chart, points, seed)
    inside = D.inside(Z)
    alphas = np.array([a for s in range(degree + 1) for a in _shell(D.n, s)], dtype=float)
    Phi = _basis(W[inside], alphas, chart.w_radii)
    w0 = chart.to_w(z[None, :])
    phi0 = _basis(w0, alphas, chart.w_radii)[0]
    val, cond = _gram_eval(Phi, phi0, weight)
    J = abs(complex(np.asarray(chart.jac_det(z[None, :])).ravel()[0])) ** 2
    return GramKernel(val * J, cond, len(alphas), int(inside.sum()))


@dataclass
class TruncatedKernel:
    radii: list
    values: list
    extrapolated: float
    spread: float
    condition: float
    degree: int


def extrapolate_exponential(R: Sequence[float], K: Sequence[float]) -> tuple[float, float]:
    """Fit K(R) = K_inf + c exp(-a R) through the last three points; returns (K_inf, spread)."""
    R = np.asarray(R, dtype=float)[-3:]
    K = np.asarray(K, dtype=float)[-3:]
    if len(K) < 3:
        return float(K[-1]), float(abs(K[-1] - K[0])) if len(K) > 1 else 0.0
    d1, d2 = K[0] - K[1], K[1] - K[2]
    if d1 <= 0 or d2 <= 0 or d2 >= d1:
        return float(K[-1]), float(abs(K[-1] - K[-2]))

    def resid(a):
        e = np.exp(-a * R)
        return (K[0] - K[1]) * (e[1] - e[2]) - (K[1] - K[2]) * (e[0] - e[1])

    h1, h2 = R[1] - R[0], R[2] - R[1]
    if abs(h1 - h2) < 1e-12 * h1:
        a = -np.log(d2 / d1) / h1
    else:
        try:
            a = brentq(resid, 1e-8, 50.0 / min(h1, h2))
        except ValueError:
            return float(K[-1]), float(abs(K[-1] - K[-2]))
    e = np.exp(-a * R)
    c = (K[1] - K[2]) / (e[1] - e[2])
    kinf = float(K[2] - c * e[2])
    return kinf, float(abs(K[2] - kinf))


def bergman_truncated(D, z, radii: Sequence[float], degree: int = 8, points: int = 2**20, seed: int = 0,
                      max_condition: float = 1e12) -> TruncatedKernel:
    """K of D intersected with growing balls; one shared point set so the sequence is non-increasing."""
    radii = sorted(float(r) for r in radii)
    z = np.asarray(z, dtype=complex).ravel()
    for R in radii:
        _require_inside(dm.truncate(D, R), z)
    chart = default_chart(D)
    W, Z, weight = _sample_chart(D, chart, points, seed)
    inD = D.inside(Z)
    r2 = np.sum(np.abs(Z) ** 2, axis=1)
    w0 = chart.to_w(z[None, :])
    J = abs(complex(np.asarray(chart.jac_det(z[None, :])).ravel()[0])) ** 2
    deg = degree
    while True:
        alphas = np.array([a for s in range(deg + 1) for a in _shell(D.n, s)], dtype=float)
        phi0 = _basis(w0, alphas, chart.w_radii)[0]
        vals, conds = [], []
        for R in radii:
            sel = inD & (r2 < R * R)
            v, c = _gram_eval(_basis(W[sel], alphas, chart.w_radii), phi0, weight)
            vals.append(v * J)
            conds.append(c)
        if max(conds) <= max_condition or deg <= 1:
            break
        deg -= 1
    # exact PSD ordering of nested Gram matrices; clip roundoff so the trace is non-increasing
    vals = list(np.minimum.accumulate(vals))
    kinf, spread = extrapolate_exponential(radii, vals)
    return TruncatedKernel(radii, vals, kinf, spread, max(conds), deg)


# ------------------------------------------------------ convergence experiment

@dataclass
class RamadanovReport:
    js: list
    values: list
    limit: float
    gaps: list
    slope: float
    inner_ok: bool
    first_inner_j: int | None
    eps: list = field(default_factory=list)


def _probe_grid(D, count: int, seed: int, margin: float) -> np.ndarray:
    g = np.random.default_rng(seed)
    R = _bounding_radius(D) if D.bounded else 4.0
    Z = R * (g.uniform(-1, 1, (count, D.n)) + 1j * g.uniform(-1, 1, (count, D.n)))
    rho = D.defining(Z)
    return Z[np.all(rho < -margin, axis=1)]


def ramadanov_experiment(family: Callable[[int], object], limit_domain, z, js: Sequence[int],
                         kernel: Callable | None = None, direction=None, probes: int = 4000,
                         margin: float = 0.05, seed: int = 0) -> RamadanovReport:
    """K_{Omega^j}(z) along a family, its gap to K_Omega(z), and the log-log slope of the gap.

    Condition (i) is checked on a compact probe set {rho_Omega < -margin}; the translation
    size needed for condition (ii) along `direction` is reported per j.
    """
    kernel = kernel or bergman_closed
    z = np.asarray(z, dtype=complex).ravel()
    K = kernel(limit_domain, z)
    inner = _probe_grid(limit_domain, probes, seed, margin)
    first_ok = None
    vals, gaps, eps = [], [], []
    for j in js:
        Dj = family(j)
        ok = bool(np.all(Dj.inside(inner)))
        if ok and first_ok is None:
            first_ok = j
        if not ok:
            first_ok = None
        v = kernel(Dj, z)
        vals.append(v)
        gaps.append(abs(v - K))
        if direction is not None:
            eps.append(_translation_needed(Dj, limit_domain, np.asarray(direction, complex), seed))
    if first_ok is None:
        raise KernelError("compact probes are not eventually contained in the family (condition (i))")
    js_arr = np.asarray(js, dtype=float)
    g = np.asarray(gaps)
    pos = g > 0
    slope = float(np.polyfit(np.log(js_arr[pos]), np.log(g[pos]), 1)[0]) if pos.sum() >= 2 else 0.0
    return RamadanovReport(list(js), vals, K, gaps, slope, True, first_ok, eps)


def _translation_needed(Dj, D, v: np.ndarray, seed: int) -> float:
    pts = _probe_grid(Dj, 4000, seed + 1, 0.0)
    for e in np.concatenate([[0.0], np.geomspace(1e-4, 2.0, 200)]):
        if np.all(D.inside(pts - e * v)):
            return float(e)
    return float("inf")
