"""F^k = K * lambda(I): evaluation with method bookkeeping, closed-form checks and localization traces."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import log

import numpy as np

from . import bergman as bg
from . import domains as dm
from . import kobayashi as kb
from .core import rng_for


class FkError(RuntimeError):
    pass


@dataclass
class FkResult:
    value: float
    kernel: float
    indicatrix: float
    sigma: float
    method_kernel: str
    method_indicatrix: str
    domain: str
    point: list
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["point"] = [[float(np.real(x)), float(np.imag(x))] for x in self.point]
        return d


DEFAULT_SOLVER = {"degree": 8, "samples": 64, "restarts": 2, "outer": 6}


def _kernel(D, z, method: str, opts: dict) -> tuple[float, float, str]:
    """(K, absolute uncertainty, tag)."""
    if method in ("auto", "closed") and bg.has_closed_kernel(D):
        return bg.bergman_closed(D, z), 0.0, "closed"
    if method == "closed":
        raise FkError(f"no closed-form kernel for {D.label}")
    if D.reinhardt and D.bounded:
        cap = opts.get("degree_cap", 4000 if D.n == 1 else 400)
        r = bg.bergman_reinhardt(D, z, tol=opts.get("series_tol", 1e-12), degree_cap=cap)
        return r.value, r.tail if np.isfinite(r.tail) else abs(r.value), "series"
    seed = opts.get("seed", 0)
    points = opts.get("points", 2**18)
    degree = opts.get("degree", 8)
    if D.bounded or opts.get("chart") is not None:
        hi = bg.bergman_gram(D, z, degree=degree, points=points, seed=seed, chart=opts.get("chart"))
        lo = bg.bergman_gram(D, z, degree=max(degree - 2, 1), points=points, seed=seed, chart=opts.get("chart"))
        return hi.value, abs(hi.value - lo.value), "gram"
    radii = opts.get("radii", (8.0, 16.0, 32.0))
    t = bg.bergman_truncated(D, z, radii, degree=degree, points=points, seed=seed)
    return t.extrapolated, t.spread + abs(t.values[-1] - t.extrapolated), "truncated"


def _indicatrix(D, z, method: str, opts: dict) -> tuple[float, float, str]:
    if method in ("auto", "closed") and kb.has_closed_indicatrix(D):
        v, e = kb.indicatrix_closed(D, z)
        return v, e, "closed"
    if method == "closed":
        raise FkError(f"no closed-form indicatrix for {D.label}")
    if method == "auto" and D.balanced and D.bounded and np.allclose(z, 0):
        return kb.domain_volume(D), 0.0, "balanced-center"
    solver = dict(DEFAULT_SOLVER)
    if D.n == 1:
        # Moebius extremals need many modes near the boundary; the repair step makes the
        # last penalty rounds redundant
        solver.update(degree=48, outer=4)
    solver.update(opts.get("solver", {}))
    solver.setdefault("seed", opts.get("seed", 0))
    if D.n == 1:
        # complex homogeneity: one direction determines the indicatrix disc
        k = kb.extremal_disc(D, z, np.array([1.0 + 0j]), **solver).metric
        return float(np.pi / k**2), float(np.pi / k**2) * 2 * solver.get("tol", 1e-6), "extremal"
    mode = opts.get("indicatrix_mode", "product")
    metric = opts.get("metric", "extremal" if method == "numeric" else "auto")
    est = kb.indicatrix_volume(D, z, mode=mode, metric=metric, samples=opts.get("samples", 2000), seed=opts.get("seed", 0),
                               nodes=tuple(opts.get("nodes", (12, 8))), solver_kw=solver)
    return est.volume, est.stderr, est.method


def fk_eval(D, z, method: str = "auto", **opts) -> FkResult:
    """F^k_D(z) with the best available factors: closed > series/balanced centre > numeric.

    method "numeric" skips closed forms for both factors (series kernel on bounded
    Reinhardt domains, extremal discs for the indicatrix).
    """
    if method not in ("auto", "closed", "numeric"):
        raise FkError(f"unknown method {method}")
    z = np.asarray(z, dtype=complex).ravel()
    if not dm.contains(D, z):
        raise dm.DomainError("point is outside the domain")
    K, sK, mk = _kernel(D, z, method, opts)
    lam, sl, ml = _indicatrix(D, z, method, opts)
    if not (K > 0 and lam > 0):
        raise FkError("non-positive factor")
    value = K * lam
    sigma = value * (sK / K + sl / lam)
    return FkResult(value, K, lam, float(sigma), mk, ml, D.label, list(z))


# ------------------------------------------------------------ closed checks

def fk_hartogs(z, w) -> float:
    """4 (|z| log|z| / (1 - |z|^2))^2 on {|w| < |z| < 1}."""
    if not dm.contains(dm.Hartogs(), [z, w]):
        raise dm.DomainError("point is outside the Hartogs triangle")
    r = abs(z)
    return 4 * (r * log(r) / (1 - r * r)) ** 2


def fk_hartogs_pipeline(z, w) -> float:
    """Same value through the product decomposition (w/z, z) in disc x punctured disc."""
    P = dm.Product(dm.Disc(), dm.PuncturedDisc())
    return fk_eval(P, [w / z, z], "closed").value


def fk_product_check(Dl, Dr, p, q, method: str = "auto", **opts) -> tuple[float, float]:
    """(relative gap, allowed gap) between F on the product and the product of F."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    a = fk_eval(Dl, p, method, **opts)
    b = fk_eval(Dr, q, method, **opts)
    c = fk_eval(dm.Product(Dl, Dr), np.concatenate([p, q]), method, **opts)
    prod = a.value * b.value
    gap = abs(c.value - prod) / prod
    rel = a.sigma / a.value + b.sigma / b.value + c.sigma / c.value
    allowed = 1e-10 if rel == 0 else 3 * rel
    return float(gap), float(allowed)


@dataclass
class BoundsReport:
    values: np.ndarray
    sigmas: np.ndarray
    points: np.ndarray
    lo: float
    hi: float
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def sample_interior(D, count: int, seed: int = 0, box: float | None = None) -> np.ndarray:
    """Uniform rejection samples from a bounded domain."""
    g = rng_for(seed, 11)
    R = box if box is not None else bg._bounding_radius(D)
    out = []
    while sum(len(o) for o in out) < count:
        Z = R * (g.uniform(-1, 1, (4 * count, D.n)) + 1j * g.uniform(-1, 1, (4 * count, D.n)))
        out.append(Z[D.inside(Z)])
    return np.concatenate(out)[:count]


def fk_bounds_check(D, count: int = 200, seed: int = 0, method: str = "auto", points=None, **opts) -> BoundsReport:
    """Sample interior points of a convex domain and check 1 <= F <= 4^n up to 3 sigma."""
    if not D.convex:
        raise FkError("bounds check needs a convex domain")
    Z = sample_interior(D, count, seed) if points is None else np.asarray(points, dtype=complex)
    vals, sig, bad = [], [], []
    top = 4.0**D.n
    for z in Z:
        r = fk_eval(D, z, method, **opts)
        vals.append(r.value)
        sig.append(r.sigma)
        if r.value < 1 - 3 * r.sigma - 1e-12 or r.value > top + 3 * r.sigma + 1e-12:
            bad.append((z, r.value, r.sigma))
    vals, sig = np.array(vals), np.array(sig)
    return BoundsReport(vals, sig, Z, float(vals.min()), float(vals.max()), bad)


# ------------------------------------------------------------ localization

@dataclass
class LocalizationTrace:
    distances: np.ndarray
    ratios: np.ndarray
    sigmas: np.ndarray
    local: list
    full: list


def cap_in_ball_chart(n: int, boundary, cut: float, a) -> dm.Pullback:
    """phi_a(B cap {Re <z, p> > cut}) for the ball automorphism phi_a swapping a and 0."""
    p = np.asarray(boundary, dtype=complex).ravel()
    cap = dm.Intersection((dm.Ball(n), dm.HalfSpace(tuple(np.conj(p)), cut)))
    phi, jac = dm.ball_automorphism(a)
    return dm.Pullback(cap, phi, jac, f"ball-cap:cut={cut:g}", 1.0, False)


def localization_experiment(boundary, cut: float, distances, n: int = 2, **opts) -> LocalizationTrace:
    """F on the ball cap U cap B relative to F on B along the radius towards a boundary point.

    The cap is moved by the ball automorphism that sends the evaluation point to 0, where
    both factors are well conditioned (the moved cap exhausts the ball as the point nears p).
    """
    p = np.asarray(boundary, dtype=complex).ravel()
    p = p / np.linalg.norm(p)
    opts.setdefault("chart", bg.Chart.identity((1.0,) * n))
    ratios, sigmas, loc, full = [], [], [], []
    for d in distances:
        a = (1 - d) * p
        if np.real(np.vdot(p, a)) <= cut:
            raise FkError("evaluation point lies outside the cap")
        E = cap_in_ball_chart(n, p, cut, a)
        r = fk_eval(E, np.zeros(n), "numeric", **opts)
        f = fk_eval(dm.Ball(n), a, "closed")
        loc.append(r)
        full.append(f)
        ratios.append(r.value / f.value)
        sigmas.append(r.sigma / f.value)
    return LocalizationTrace(np.asarray(distances, float), np.array(ratios), np.array(sigmas), loc, full)
