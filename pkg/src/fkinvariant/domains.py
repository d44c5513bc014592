"""Domain catalog: membership, defining functions, distances to boundary pieces, truncation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .core import MixedPolynomial, laplacian_nonneg


class DomainError(ValueError):
    pass


def _stack(Z, n: int) -> np.ndarray:
    Z = np.asarray(Z, dtype=complex)
    if Z.shape[-1] != n:
        raise DomainError(f"dimension mismatch: domain has n={n}, point has {Z.shape[-1]}")
    return Z


class Domain:
    """Base of all catalog entries. Subclasses set n and implement _rho."""

    n: int
    convex = False
    bounded = True
    balanced = False
    reinhardt = False

    def _rho(self, Z: np.ndarray) -> np.ndarray:  # (..., n) -> (..., p)
        raise NotImplementedError

    def defining(self, Z) -> np.ndarray:
        return self._rho(_stack(Z, self.n))

    def inside(self, Z) -> np.ndarray:
        """Vectorized strict membership."""
        return np.all(self.defining(Z) < 0, axis=-1)

    @property
    def label(self) -> str:
        return type(self).__name__.lower()


def _abs2(z):
    return z.real**2 + z.imag**2


@dataclass(frozen=True, eq=True)
class Disc(Domain):
    n = 1
    convex = True
    balanced = True
    reinhardt = True

    def _rho(self, Z):
        return (_abs2(Z[..., 0]) - 1.0)[..., None]

    @property
    def label(self):
        return "disc"


@dataclass(frozen=True)
class PuncturedDisc(Domain):
    n = 1

    def _rho(self, Z):
        r = np.abs(Z[..., 0])  # hypot: no underflow next to the puncture
        return np.stack([r * r - 1.0, -r], axis=-1)

    @property
    def label(self):
        return "punctured"


@dataclass(frozen=True)
class Ball(Domain):
    n: int = 2
    convex = True
    balanced = True
    reinhardt = True

    def _rho(self, Z):
        return (np.sum(_abs2(Z), axis=-1) - 1.0)[..., None]

    @property
    def label(self):
        return f"ball:n={self.n}"


@dataclass(frozen=True)
class Polydisc(Domain):
    n: int = 2
    convex = True
    balanced = True
    reinhardt = True

    def _rho(self, Z):
        return _abs2(Z) - 1.0

    @property
    def label(self):
        return f"polydisc:n={self.n}"


@dataclass(frozen=True)
class EggC2(Domain):
    """|z|^2 + |w|^(2 mu) < 1"""

    mu: float = 2
    n = 2
    convex = True
    balanced = True
    reinhardt = True

    def __post_init__(self):
        if self.mu < 1:
            raise DomainError("egg exponent must be >= 1")

    @property
    def exponents(self) -> tuple[float, ...]:
        return (1.0, float(self.mu))

    def _rho(self, Z):
        return (_abs2(Z[..., 0]) + _abs2(Z[..., 1]) ** self.mu - 1.0)[..., None]

    @property
    def label(self):
        return f"egg2:mu={self.mu:g}"


@dataclass(frozen=True)
class EggHi(Domain):
    """|z_1|^(2m) + sum_{j>=2} |z_j|^2 < 1"""

    n: int = 2
    m: float = 2
    convex = True
    balanced = True
    reinhardt = True

    def __post_init__(self):
        if self.n < 2 or self.m < 1:
            raise DomainError("need n >= 2 and m >= 1")

    @property
    def exponents(self) -> tuple[float, ...]:
        return (float(self.m),) + (1.0,) * (self.n - 1)

    def _rho(self, Z):
        return (_abs2(Z[..., 0]) ** self.m + np.sum(_abs2(Z[..., 1:]), axis=-1) - 1.0)[..., None]

    @property
    def label(self):
        return f"egg:n={self.n},m={self.m:g}"


@dataclass(frozen=True)
class Hartogs(Domain):
    """|w| < |z| < 1"""

    n = 2

    def _rho(self, Z):
        a, b = _abs2(Z[..., 0]), _abs2(Z[..., 1])
        return np.stack([a - 1.0, b - a], axis=-1)

    @property
    def label(self):
        return "hartogs"


@dataclass(frozen=True)
class Model(Domain):
    """2 Re z_n + P(z_1) + sum_{2<=j<=n-1} |z_j|^2 < 0"""

    P: MixedPolynomial = field(default_factory=lambda: MixedPolynomial.modulus_power(1))
    n: int = 2
    bounded = False

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("model domains need n >= 2")
        if self.P.has_harmonic_terms():
            raise DomainError("model polynomial has harmonic terms")
        if not laplacian_nonneg(self.P):
            raise DomainError("model polynomial is not subharmonic")

    @property
    def convex(self):
        return self.P.degree <= 2 or self.monomial_power() is not None

    def monomial_power(self) -> int | None:
        """m if P = c|z_1|^(2m) with c > 0, else None."""
        if len(self.P.coeffs) != 1:
            return None
        (j, k), c = next(iter(self.P.coeffs.items()))
        return j if j == k and c.real > 0 else None

    def _rho(self, Z):
        mid = np.sum(_abs2(Z[..., 1:-1]), axis=-1) if self.n > 2 else 0.0
        return (2 * Z[..., -1].real + self.P.eval_raw(Z[..., 0]).real + mid)[..., None]

    @property
    def label(self):
        return f"model:n={self.n},P={self.P.to_string()}"


@dataclass(frozen=True)
class SiegelCorner(Domain):
    """Im z_1 + 1 > Q1(z_2)/m^2, Im z_2 > -1"""

    Q1: MixedPolynomial = field(default_factory=lambda: MixedPolynomial.modulus_power(1))
    m: float = 1.0
    n = 2
    bounded = False
    convex = True

    def __post_init__(self):
        if self.m <= 0:
            raise DomainError("m must be positive")
        if self.Q1.degree > 2:
            raise DomainError("Q1 must be quadratic")
        L = laplacian_nonneg(self.Q1)
        if not L or L.min_value <= 0:
            raise DomainError("Q1 must be strictly subharmonic")

    def _rho(self, Z):
        q = self.Q1.eval_raw(Z[..., 1]).real / self.m**2
        return np.stack([q - Z[..., 0].imag - 1.0, -Z[..., 1].imag - 1.0], axis=-1)

    @property
    def label(self):
        return f"siegel:m={self.m:g},Q1={self.Q1.to_string()}"


@dataclass(frozen=True)
class HalfPlaneCorner(Domain):
    """Im z_1 > -c1, Im z_2 > -c2"""

    c1: float = 1.0
    c2: float = 1.0
    n = 2
    bounded = False
    convex = True

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise DomainError("corner offsets must be positive")

    def _rho(self, Z):
        return np.stack([-Z[..., 0].imag - self.c1, -Z[..., 1].imag - self.c2], axis=-1)

    @property
    def label(self):
        return f"corner:c1={self.c1:g},c2={self.c2:g}"


@dataclass(frozen=True)
class Product(Domain):
    left: Domain = field(default_factory=Disc)
    right: Domain = field(default_factory=Disc)

    @property
    def n(self):
        return self.left.n + self.right.n

    @property
    def convex(self):
        return self.left.convex and self.right.convex

    @property
    def bounded(self):
        return self.left.bounded and self.right.bounded

    @property
    def balanced(self):
        return self.left.balanced and self.right.balanced

    @property
    def reinhardt(self):
        return self.left.reinhardt and self.right.reinhardt

    def _rho(self, Z):
        k = self.left.n
        return np.concatenate([self.left._rho(Z[..., :k]), self.right._rho(Z[..., k:])], axis=-1)

    @property
    def label(self):
        return f"product({self.left.label};{self.right.label})"


@dataclass(frozen=True)
class QuadraticPiece:
    """rho(z) = -Im z_sigma + Q(z_tau), tau the other coordinate, Q real of degree <= 2."""

    sigma: int
    Q: MixedPolynomial = field(default_factory=MixedPolynomial)

    def __post_init__(self):
        if self.sigma not in (0, 1):
            raise DomainError("sigma must be 0 or 1")
        if self.Q.degree > 2:
            raise DomainError("pieces are at most quadratic")

    @property
    def tau(self) -> int:
        return 1 - self.sigma

    def __call__(self, Z):
        return -Z[..., self.sigma].imag + self.Q.eval_raw(Z[..., self.tau]).real

    def real_form(self) -> tuple[np.ndarray, np.ndarray, float]:
        """(H, g, c) with rho(x) = x.H.x/2 + g.x + c in coordinates (Re z1, Im z1, Re z2, Im z2)."""
        a = self.Q.coeffs
        a00 = a.get((0, 0), 0).real
        a10 = a.get((1, 0), 0)
        a11 = a.get((1, 1), 0).real
        a20 = a.get((2, 0), 0)
        H = np.zeros((4, 4))
        g = np.zeros(4)
        t, s = 2 * self.tau, 2 * self.sigma
        H[t, t] = 2 * a11 + 4 * a20.real
        H[t + 1, t + 1] = 2 * a11 - 4 * a20.real
        H[t, t + 1] = H[t + 1, t] = -4 * a20.imag
        g[t] = 2 * a10.real
        g[t + 1] = -2 * a10.imag
        g[s + 1] = -1.0
        return H, g, a00

    def translated_scaled(self, p, s) -> "QuadraticPiece":
        """Piece for w with z = p + s*w (s positive reals per coordinate), renormalised by 1/s_sigma."""
        p = np.asarray(p, dtype=complex)
        ss, st = float(s[self.sigma]), float(s[self.tau])
        q = self.Q.coeffs
        pt = p[self.tau]
        # expand Q(pt + st w) in w, wbar
        new: dict[tuple[int, int], complex] = {}
        for (j, k), a in q.items():
            for jj in range(j + 1):
                for kk in range(k + 1):
                    c = a * _binom(j, jj) * _binom(k, kk) * pt ** (j - jj) * np.conj(pt) ** (k - kk) * st ** (jj + kk)
                    new[(jj, kk)] = new.get((jj, kk), 0) + c
        new[(0, 0)] = new.get((0, 0), 0) - p[self.sigma].imag
        new = {jk: v / ss for jk, v in new.items()}
        # symmetrise roundoff
        for (j, k) in list(new):
            if (k, j) in new:
                avg = 0.5 * (new[(j, k)] + np.conj(new[(k, j)]))
                new[(j, k)], new[(k, j)] = avg, np.conj(avg)
        return QuadraticPiece(self.sigma, MixedPolynomial(new))


def _binom(a: int, b: int) -> int:
    from math import comb
    return comb(a, b)


@dataclass(frozen=True)
class PolyhedralC2(Domain):
    pieces: tuple[QuadraticPiece, ...] = ()
    n = 2

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not 1 <= len(self.pieces) <= 2:
            raise DomainError("one or two pieces supported")
        if len(self.pieces) == 2 and self.pieces[0].sigma == self.pieces[1].sigma:
            # the -Im z_sigma parts coincide, so independence can fail on common zeros
            raise DomainError("pieces must be graphs over different coordinates for independent gradients")

    @property
    def bounded(self):
        return False

    @property
    def convex(self):
        return all(np.all(np.linalg.eigvalsh(p.real_form()[0]) >= -1e-14) for p in self.pieces)

    def _rho(self, Z):
        return np.stack([p(Z) for p in self.pieces], axis=-1)

    @property
    def label(self):
        return "polyhedral(" + ";".join(f"s={p.sigma},Q={p.Q.to_string()}" for p in self.pieces) + ")"


@dataclass(frozen=True)
class HalfSpace(Domain):
    """Re sum a_k z_k > c"""

    a: tuple = (0.0, 1.0)
    c: float = 0.0
    convex = True
    bounded = False

    @property
    def n(self):
        return len(self.a)

    def _rho(self, Z):
        return (self.c - (Z @ np.asarray(self.a, dtype=complex)).real)[..., None]

    @property
    def label(self):
        return f"halfspace:a={list(self.a)},c={self.c:g}"


@dataclass(frozen=True)
class Intersection(Domain):
    parts: tuple[Domain, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if len({p.n for p in self.parts}) != 1:
            raise DomainError("intersection of domains of different dimension")

    @property
    def n(self):
        return self.parts[0].n

    @property
    def convex(self):
        return all(p.convex for p in self.parts)

    @property
    def bounded(self):
        return any(p.bounded for p in self.parts)

    def _rho(self, Z):
        return np.concatenate([p._rho(Z) for p in self.parts], axis=-1)

    @property
    def label(self):
        return "intersection(" + ";".join(p.label for p in self.parts) + ")"


@dataclass(frozen=True)
class Truncated(Domain):
    """base intersected with the ball of radius R about 0."""

    base: Domain = field(default_factory=Disc)
    R: float = 1.0

    @property
    def n(self):
        return self.base.n

    @property
    def convex(self):
        return self.base.convex

    def _rho(self, Z):
        return np.concatenate([self.base._rho(Z), (np.sum(_abs2(Z), axis=-1) - self.R**2)[..., None]], axis=-1)

    @property
    def label(self):
        return f"trunc({self.base.label};R={self.R:g})"


@dataclass(frozen=True)
class Affine(Domain):
    """shift + scale * base, scale a complex scalar or one complex factor per coordinate."""

    base: Domain = field(default_factory=Disc)
    scale: complex | tuple = 1.0
    shift: tuple = ()

    @property
    def n(self):
        return self.base.n

    @property
    def convex(self):
        return self.base.convex

    @property
    def bounded(self):
        return self.base.bounded

    def scale_vector(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.scale, dtype=complex), (self.n,))

    def shift_vector(self) -> np.ndarray:
        return np.zeros(self.n, complex) if len(self.shift) == 0 else np.asarray(self.shift, dtype=complex)

    def to_base(self, Z):
        return (np.asarray(Z, dtype=complex) - self.shift_vector()) / self.scale_vector()

    def _rho(self, Z):
        return self.base._rho(self.to_base(Z))

    @property
    def label(self):
        return f"affine({self.base.label};scale={self.scale},shift={list(self.shift)})"


@dataclass(frozen=True, eq=False)
class Pullback(Domain):
    """Image F(base) of a biholomorphism, described through G = F^{-1}.

    to_base maps (..., n) points into base coordinates; to_base_jac returns the
    (..., n, n) complex Jacobian of G.  rho is base rho composed with G, divided by
    rho_scale (a positive constant that keeps defining values O(1)).
    """

    base: Domain = field(default_factory=Disc)
    to_base: Callable = None
    to_base_jac: Callable = None
    name: str = "pullback"
    rho_scale: float = 1.0
    convex_flag: bool = False

    @property
    def n(self):
        return self.base.n

    @property
    def convex(self):
        return self.convex_flag

    @property
    def bounded(self):
        return False

    def _rho(self, Z):
        return self.base._rho(self.to_base(Z)) / self.rho_scale

    @property
    def label(self):
        return self.name


def model_as_egg(D: Model) -> Pullback | None:
    """{2 Re z_2 + c|z_1|^(2m) < 0} as the image of the egg {|u|^2 + |w|^(2m) < 1}.

    u = (1 + z_2)/(1 - z_2), w = (2c)^(1/(2m)) z_1 (1 - z_2)^(-1/m); None for other models.
    """
    m = D.monomial_power() if isinstance(D, Model) and D.n == 2 else None
    if m is None:
        return None
    c = D.P.coeffs[(m, m)].real
    k = (2 * c) ** (1 / (2 * m))

    def to_base(Z):
        Z = np.asarray(Z, dtype=complex)
        d = 1 - Z[..., 1]
        return np.stack([(1 + Z[..., 1]) / d, k * Z[..., 0] * d ** (-1 / m)], axis=-1)

    def jac(Z):
        Z = np.asarray(Z, dtype=complex)
        d = 1 - Z[..., 1]
        J = np.zeros(Z.shape + (2,), dtype=complex)
        J[..., 0, 1] = 2 / d**2
        J[..., 1, 0] = k * d ** (-1 / m)
        J[..., 1, 1] = k * Z[..., 0] * d ** (-1 / m - 1) / m
        return J

    return Pullback(EggC2(m), to_base, jac, f"egg-image:{D.label}", 1.0, True)


def ball_automorphism(a) -> tuple[Callable, Callable]:
    """Involutive automorphism of the unit ball swapping a and 0, with its Jacobian."""
    a = np.asarray(a, dtype=complex).ravel()
    n = a.size
    r2 = float(np.sum(np.abs(a) ** 2))
    if r2 >= 1:
        raise DomainError("centre must lie in the unit ball")
    s = np.sqrt(1 - r2)
    M = s * np.eye(n, dtype=complex) + ((1 - s) / r2 * np.outer(a, np.conj(a)) if r2 > 0 else 0)

    def phi(Z):
        Z = np.asarray(Z, dtype=complex)
        d = 1 - Z @ np.conj(a)
        return (a - Z @ M.T) / d[..., None]

    def jac(Z):
        Z = np.asarray(Z, dtype=complex)
        d = 1 - Z @ np.conj(a)
        N = a - Z @ M.T
        return (-M * d[..., None, None] + N[..., :, None] * np.conj(a)[None, :]) / (d**2)[..., None, None]

    return phi, jac


def dim(D: Domain) -> int:
    return D.n


def contains(D: Domain, z) -> bool:
    z = np.asarray(z, dtype=complex).ravel()
    if z.size != D.n:
        raise DomainError(f"dimension mismatch: domain has n={D.n}, point has {z.size}")
    return bool(D.inside(z))


def defining_values(D: Domain, z) -> list[float]:
    z = np.asarray(z, dtype=complex).ravel()
    if z.size != D.n:
        raise DomainError(f"dimension mismatch: domain has n={D.n}, point has {z.size}")
    return [float(x) for x in D.defining(z)]


def _to_real(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.column_stack([z.real, z.imag]).ravel()


def piece_distance(D: PolyhedralC2, z, i: int, tol: float = 1e-10, max_iter: int = 100) -> float:
    """Euclidean distance from z to the zero set of piece i."""
    z = np.asarray(z, dtype=complex).ravel()
    if not contains(D, z):
        raise DomainError("point is outside the domain")
    H, g, c = D.pieces[i].real_form()
    x0 = _to_real(z)
    rho0 = 0.5 * x0 @ H @ x0 + g @ x0 + c
    if not np.any(H):
        return abs(rho0) / np.linalg.norm(g)
    lam, U = np.linalg.eigh(H)
    y0 = U.T @ x0
    gy = U.T @ g

    # stationary points of |x - x0|^2/2 - t rho(x): x(t) = (I - tH)^{-1}(x0 + t g), t >= 0
    def point(t):
        return (y0 + t * gy) / (1 - t * lam)

    def phi(t):
        y = point(t)
        return 0.5 * np.sum(lam * y * y) + gy @ y + c

    def dphi(t):
        y = point(t)
        return (lam * y + gy) @ ((gy + lam * y) / (1 - t * lam))

    tmax = np.inf if lam.max() <= 0 else 1.0 / lam.max()
    lo, hi = 0.0, None
    t = 1e-3 if np.isinf(tmax) else min(1e-3, 0.5 * tmax)
    while hi is None:
        if phi(t) > 0:
            hi = t
        else:
            lo = t
            t = 2 * t if np.isinf(tmax) else 0.5 * (t + tmax)
            if t > 1e12 or (not np.isinf(tmax) and tmax - t < 1e-13 * tmax):
                return _projection_fallback(H, g, c, x0, tol)
    t = 0.5 * (lo + hi)
    thr = tol * min(1.0, abs(rho0))  # relative near the boundary, where distances are tiny
    for _ in range(max_iter):
        f = phi(t)
        if abs(f) < thr or hi - lo <= 4e-16 * hi:
            return float(np.linalg.norm(point(t) - y0))
        if f > 0:
            hi = t
        else:
            lo = t
        d = dphi(t)
        tn = t - f / d if d != 0 else 0.5 * (lo + hi)
        t = tn if lo < tn < hi else 0.5 * (lo + hi)
    raise DomainError("Newton projection did not converge")


def _projection_fallback(H, g, c, x0, tol):
    # degenerate focal case: the nearest point is off the symmetric branch, so minimise directly
    from scipy.optimize import minimize
    cons = {"type": "eq", "fun": lambda x: 0.5 * x @ H @ x + g @ x + c, "jac": lambda x: H @ x + g}
    best = np.inf
    rng = np.random.default_rng(0)
    for k in range(8):
        start = x0 + (0.0 if k == 0 else 0.5) * rng.standard_normal(4)
        r = minimize(lambda x: 0.5 * np.sum((x - x0) ** 2), start, jac=lambda x: x - x0, constraints=[cons],
                     method="SLSQP", options={"ftol": 1e-15, "maxiter": 200})
        if abs(cons["fun"](r.x)) < tol:
            best = min(best, float(np.linalg.norm(r.x - x0)))
    if not np.isfinite(best):
        raise DomainError("Newton projection did not converge")
    return best


def truncate(D: Domain, R: float) -> Truncated:
    if R <= 0:
        raise DomainError("truncation radius must be positive")
    return Truncated(D, float(R))


def convex_by_segments(D: Domain, points: np.ndarray, rng: np.random.Generator, trials: int = 2000) -> bool:
    """Random segment test: midpoints-type samples of segments between interior points stay inside."""
    inside = points[D.inside(points)]
    if len(inside) < 2:
        raise DomainError("need interior points")
    i = rng.integers(0, len(inside), trials)
    j = rng.integers(0, len(inside), trials)
    t = rng.random(trials)[:, None]
    seg = (1 - t) * inside[i] + t * inside[j]
    return bool(np.all(D.inside(seg)))
