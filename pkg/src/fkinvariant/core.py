"""Complex vectors, real mixed polynomials in one variable, sphere sampling and seeded randomness."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.optimize import minimize_scalar

CVector = np.ndarray

REAL_TOL = 1e-12


class PolynomialError(ValueError):
    pass


def as_cvector(z, n: int | None = None) -> CVector:
    """Coerce to a 1-D complex128 array with finite entries."""
    v = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if v.size == 0:
        raise ValueError("empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    if n is not None and v.size != n:
        raise ValueError(f"expected dimension {n}, got {v.size}")
    return v


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for (seed, stream...); all randomness goes through here."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), *stream])))


@dataclass(frozen=True)
class MixedPolynomial:
    """Real-valued polynomial sum a_jk v^j conj(v)^k in one complex variable."""

    coeffs: Mapping[tuple[int, int], complex] = field(default_factory=dict)
    no_harmonic: bool = False

    def __post_init__(self):
        clean = {}
        for (j, k), a in dict(self.coeffs).items():
            if j < 0 or k < 0:
                raise PolynomialError("negative exponent")
            a = complex(a)
            if a != 0:
                clean[(int(j), int(k))] = a
        scale = max([abs(a) for a in clean.values()], default=1.0)
        for (j, k), a in clean.items():
            b = clean.get((k, j), 0.0)
            if abs(a - np.conj(b)) > 1e-12 * max(scale, 1.0):
                raise PolynomialError(f"coefficients ({j},{k}) and ({k},{j}) are not conjugate")
        if self.no_harmonic:
            for (j, k) in clean:
                if (j == 0) != (k == 0):
                    raise PolynomialError(f"harmonic term ({j},{k}) in a polynomial flagged harmonic-free")
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def modulus_power(cls, p: int, c: float = 1.0) -> "MixedPolynomial":
        """c |v|^(2p)"""
        return cls({(p, p): c}, no_harmonic=True)

    @property
    def degree(self) -> int:
        return max((j + k for j, k in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_homogeneous(self) -> bool:
        return len({j + k for j, k in self.coeffs}) <= 1

    def has_harmonic_terms(self) -> bool:
        return any((j == 0) != (k == 0) for j, k in self.coeffs)

    def homogeneous_part(self, l: int) -> "MixedPolynomial":
        return MixedPolynomial({jk: a for jk, a in self.coeffs.items() if sum(jk) == l})

    def scaled(self, c: float) -> "MixedPolynomial":
        return MixedPolynomial({jk: c * a for jk, a in self.coeffs.items()}, self.no_harmonic)

    def __add__(self, other: "MixedPolynomial") -> "MixedPolynomial":
        out = dict(self.coeffs)
        for jk, a in other.coeffs.items():
            out[jk] = out.get(jk, 0) + a
        return MixedPolynomial(out)

    def dilate(self, t: complex) -> "MixedPolynomial":
        """Coefficients of v -> P(t v)."""
        tc = np.conj(t)
        return MixedPolynomial({(j, k): a * t**j * tc**k for (j, k), a in self.coeffs.items()}, self.no_harmonic)

    def eval_raw(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        out = np.zeros(v.shape, dtype=complex)
        vc = np.conj(v)
        for (j, k), a in self.coeffs.items():
            out = out + a * v**j * vc**k
        return out

    def abs_bound(self, v) -> np.ndarray:
        r = np.abs(np.asarray(v, dtype=complex))
        out = np.zeros(r.shape)
        for (j, k), a in self.coeffs.items():
            out = out + abs(a) * r ** (j + k)
        return out

    def __call__(self, v):
        return poly_eval(self, v)

    def to_string(self) -> str:
        terms = []
        for (j, k), a in sorted(self.coeffs.items()):
            parts = [repr(a.real) if a.imag == 0 else f"({a.real!r}{a.imag:+}j)"]
            if j:
                parts.append(f"z1^{j}")
            if k:
                parts.append(f"zb1^{k}")
            terms.append("*".join(parts))
        return " + ".join(terms) if terms else "0"


def poly_eval(P: MixedPolynomial, v):
    """Evaluate P; imaginary residue above the relative tolerance means broken symmetry."""
    raw = P.eval_raw(v)
    bound = 1.0 + P.abs_bound(v)
    if np.any(np.abs(raw.imag) > REAL_TOL * bound):
        raise PolynomialError("polynomial evaluation is not real")
    out = raw.real
    return float(out) if out.ndim == 0 else out


def _circle_abs(P: MixedPolynomial, theta):
    return np.abs(P.eval_raw(np.exp(1j * np.asarray(theta))).real)


def poly_sup_norm(P: MixedPolynomial, grid: int = 4096) -> float:
    """max over the unit circle of |P|; grid search then golden-section refinement."""
    if P.is_zero():
        return 0.0
    if not P.is_homogeneous():
        raise PolynomialError("sup norm convention is for homogeneous polynomials")
    theta = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    vals = _circle_abs(P, theta)
    best = float(vals.max())
    h = 2 * np.pi / grid
    top = np.argsort(vals)[-8:]
    for i in top:
        # local maxima only
        if vals[i] < vals[i - 1] or vals[i] < vals[(i + 1) % grid]:
            continue
        res = minimize_scalar(lambda t: -float(_circle_abs(P, t)), bounds=(theta[i] - h, theta[i] + h),
                              method="bounded", options={"xatol": 1e-13})
        best = max(best, -float(res.fun))
    return best


def laplacian(P: MixedPolynomial) -> MixedPolynomial:
    """Coefficients of the Euclidean Laplacian 4 d^2/dv dvbar."""
    return MixedPolynomial({(j - 1, k - 1): 4 * j * k * a for (j, k), a in P.coeffs.items() if j and k})


@dataclass(frozen=True)
class LaplacianReport:
    ok: bool
    leading_sign: int
    min_value: float

    def __bool__(self):
        return self.ok


def laplacian_nonneg(P: MixedPolynomial, R: float = 4.0, N: int = 201) -> LaplacianReport:
    """Grid test of subharmonicity on the disc of radius R.

    leading_sign is the sign of the Laplacian of the top-degree part on the unit circle:
    +1 positive everywhere, 0 vanishing somewhere (or identically), -1 negative somewhere.
    """
    L = laplacian(P)
    x = np.linspace(-R, R, N)
    X, Y = np.meshgrid(x, x)
    V = (X + 1j * Y)[X**2 + Y**2 <= R * R]
    vals = L.eval_raw(V).real if not L.is_zero() else np.zeros(V.shape)
    lo = float(vals.min())
    top = laplacian(P.homogeneous_part(P.degree)) if P.degree >= 2 else MixedPolynomial()
    if top.is_zero():
        sign = 0
    else:
        c = top.eval_raw(np.exp(1j * np.linspace(0, 2 * np.pi, 4096, endpoint=False))).real
        scale = np.abs(c).max()
        sign = 1 if c.min() > 1e-12 * scale else (-1 if c.min() < -1e-12 * scale else 0)
    return LaplacianReport(lo >= -1e-12, sign, lo)


def sphere_sample(n: int, M: int, seed: int = 0, mode: str = "random") -> np.ndarray:
    """M unit vectors in C^n as an (M, n) complex array.

    mode "angles" (n=1 only) gives the equispaced points exp(2 pi i k/M).
    """
    if M < 1:
        raise ValueError("need at least one sample")
    if mode == "angles":
        if n != 1:
            raise ValueError("equispaced mode is only defined on the circle")
        return np.exp(2j * np.pi * np.arange(M) / M).reshape(M, 1)
    g = rng_for(seed, 1)
    x = g.standard_normal((M, n)) + 1j * g.standard_normal((M, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)

