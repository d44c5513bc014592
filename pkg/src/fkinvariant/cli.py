"""Command-line front end.

Usage::

    fkinvariant fk --domain hartogs --point 0.3679,0.1
    fkinvariant scale-study --domain egg2:mu=2 --boundary 1,0 --steps 12 --out run1
    fkinvariant --version

Every option can also come from a plain-text config (``--config FILE``) holding one
``key=value`` per line; ``#`` starts a comment.  Flags on the command line win over the
file.  Unknown keys are rejected.  Commands that draw random numbers refuse to run
without an explicit ``seed``.

Domain grammar
--------------
::

    domain  := factor ('|' factor)*          factors joined by '|' form a product
    factor  := name [':' key=value (',' key=value)*]

Names and their parameters:

=================  ============================================  =========================
name               domain                                        parameters (defaults)
=================  ============================================  =========================
disc               unit disc                                     none
punctured-disc     unit disc minus 0                             none
ball               unit ball in C^n                              n (2)
polydisc           unit polydisc in C^n                          n (2)
egg2               {abs(z)^2 + abs(w)^(2 mu) < 1}                mu (2)
egg                {abs(z_1)^(2m) + abs(z')^2 < 1} in C^n        n (2), m (2)
hartogs            {abs(w) < abs(z) < 1}, point order (z, w)     none
model              {2 Re z_n + P(z_1) + ... < 0}                 n (2), P (z1*zb1)
siegel             Siegel corner with quadratic Q1 and ratio m   m (1), Q1 (z1*zb1)
corner             {Im z_1 > -c1, Im z_2 > -c2}                  c1 (1), c2 (1)
polyhedral         {Im z_1 > Q1(z_2), Im z_2 > Q2(z_1)}          Q1 (z1*zb1), Q2 (z1*zb1);
                                                                 Q2=none keeps one piece
=================  ============================================  =========================

Polynomials in one variable use ``z1`` (or ``z``) and ``zb1`` (or ``zb``) for the
variable and its conjugate: ``z1^2*zb1^2``, ``0.5*z1*zb1 + (0.1+0.2j)*z1^2 + (0.1-0.2j)*zb1^2``.
Points are comma-separated complex numbers: ``0.3679,0.1`` or ``0.1+0.2j,0``.

Exit codes: 0 success, 2 usage or parse error, 3 domain error (bad parameters, point
outside), 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import bergman as bg
from . import domains as dm
from . import invariant as iv
from . import polyhedral as ph
from . import scaling as sc
from .core import MixedPolynomial, PolynomialError

SCHEMA_VERSION = "1"
COMMANDS = ("fk", "scan", "scale-study", "polyhedral", "ramadanov")


class ConfigError(ValueError):
    """Bad command line, config text or domain/point string (exit 2)."""


# ------------------------------------------------------------------ config

def _int(s):
    return int(s)


def _float(s):
    return float(s)


def _str(s):
    return str(s).strip()


def _ints(s):
    """'1,2,5' or an inclusive range '4:64'."""
    s = str(s).strip()
    if ":" in s:
        a, b = s.split(":", 1)
        return tuple(range(int(a), int(b) + 1))
    return tuple(int(x) for x in s.split(",") if x.strip())


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s}")


def _choice(*opts):
    def f(s):
        s = str(s).strip()
        if s not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return s
    return f


# key -> (parser, default, help)
KEYS: dict[str, tuple] = {
    "command": (_choice(*COMMANDS), None, "subcommand"),
    "domain": (_str, None, "domain string"),
    "point": (_str, None, "evaluation point"),
    "boundary": (_str, None, "boundary point for sequences"),
    "method": (_choice("auto", "closed", "numeric"), "auto", "factor evaluation method"),
    "seed": (_int, None, "64-bit seed; required on stochastic paths"),
    "threads": (_int, 1, "worker threads"),
    "out": (_str, "fk-out", "output directory for CSV/JSON artifacts"),
    "points": (_int, 2**18, "quadrature points for numeric kernels"),
    "degree": (_int, 8, "polynomial degree of numeric kernel bases"),
    "disc_degree": (_int, 8, "degree of trial extremal discs"),
    "restarts": (_int, 2, "extremal disc restarts"),
    "samples": (_int, 2000, "Monte Carlo directions (mc indicatrix mode)"),
    "nodes": (_ints, (12, 8), "product quadrature nodes (t, psi)"),
    "steps": (_int, 12, "sequence length"),
    "d_min": (_float, 1e-3, "smallest boundary distance"),
    "d_max": (_float, 0.5, "largest boundary distance"),
    "approach": (_choice("radial", "tangential", "mixed"), "radial", "sequence family"),
    "c": (_float, 0.5, "family parameter (tangential c, mixed m)"),
    "window": (_int, 8, "classification window"),
    "tol": (_float, 0.05, "classification tolerance"),
    "eval_steps": (_int, 1, "trailing steps evaluated in a polyhedral study"),
    "gaps": (_bool, False, "also report Hausdorff gaps to the limit"),
    "gap_grid": (_int, 64, "grid per axis for Hausdorff gaps"),
    "scan": (_choice("segment", "bounds", "localization"), "segment", "scan kind"),
    "start": (_str, None, "segment start point"),
    "stop": (_str, None, "segment end point"),
    "count": (_int, 200, "interior samples for a bounds scan"),
    "cut": (_float, 0.5, "half-space offset for a localization scan"),
    "family": (_choice("balls", "polydiscs"), "balls", "Ramadanov family"),
    "js": (_ints, tuple(range(4, 65)), "Ramadanov indices, list or a:b (radius 1 - 1/j)"),
    "n": (_int, 2, "dimension for Ramadanov families"),
}


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def get(self, key):
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        return self.values.get(key, KEYS[key][1])

    def set(self, key, raw):
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        try:
            self.values[key] = KEYS[key][0](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc

    def to_text(self) -> str:
        return "".join(f"{k}={_fmt_value(self.values[k])}\n" for k in sorted(self.values))

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cfg = cls()
        for i, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {i}: expected key=value")
            k, v = line.split("=", 1)
            cfg.set(k.strip(), v.strip())
        return cfg


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"\s*(?:(?P<cplx>\([^()]*\))|(?P<num>\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
                    r"|(?P<var>zb1|zb|z1|z)|(?P<op>[-+*^]))")


def parse_polynomial(text: str) -> MixedPolynomial:
    """Sum of terms coef*z1^j*zb1^k; see the module docstring."""
    s = text.strip()
    pos, toks = 0, []
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"cannot parse polynomial at {s[pos:]!r}")
        toks.append((m.lastgroup, m.group(m.lastgroup)))
        pos = m.end()
        while pos < len(s) and s[pos].isspace():
            pos += 1
    coeffs: dict = {}
    i, sign = 0, 1.0
    if not toks:
        raise ConfigError("empty polynomial")
    while i < len(toks):
        if toks[i] == ("op", "+") or toks[i] == ("op", "-"):
            sign = -1.0 if toks[i][1] == "-" else 1.0
            i += 1
        coef, j, k, need = complex(sign), 0, 0, True
        while i < len(toks) and need:
            kind, val = toks[i]
            if kind == "num":
                coef *= float(val)
            elif kind == "cplx":
                try:
                    coef *= complex(val.replace(" ", ""))
                except ValueError as exc:
                    raise ConfigError(f"bad coefficient {val}") from exc
            elif kind == "var":
                e = 1
                if i + 1 < len(toks) and toks[i + 1] == ("op", "^"):
                    if i + 2 >= len(toks) or toks[i + 2][0] != "num" or not toks[i + 2][1].isdigit():
                        raise ConfigError("exponent must be a non-negative integer")
                    e = int(toks[i + 2][1])
                    i += 2
                if val.startswith("zb"):
                    k += e
                else:
                    j += e
            else:
                raise ConfigError(f"unexpected {val!r} in polynomial")
            i += 1
            if i < len(toks) and toks[i] == ("op", "*"):
                i += 1
            else:
                need = False
        coeffs[(j, k)] = coeffs.get((j, k), 0) + coef
        sign = 1.0
        if i < len(toks) and toks[i][1] not in "+-":
            raise ConfigError(f"expected + or - in polynomial, got {toks[i][1]!r}")
    try:
        return MixedPolynomial(coeffs)
    except PolynomialError as exc:
        raise ConfigError(str(exc)) from exc


def parse_point(text: str) -> np.ndarray:
    try:
        return np.array([complex(x.strip().replace(" ", "").replace("i", "j")) for x in str(text).split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad point {text!r}") from exc


def _params(body: str) -> dict:
    out = {}
    for item in filter(None, (p.strip() for p in body.split(","))):
        if "=" not in item:
            raise ConfigError(f"expected key=value in {body!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _take(p: dict, name: str, allowed: dict) -> dict:
    extra = set(p) - set(allowed)
    if extra:
        raise ConfigError(f"{name}: unknown parameter(s) {sorted(extra)}")
    out = {}
    for k, (conv, default) in allowed.items():
        try:
            out[k] = conv(p[k]) if k in p else default
        except ValueError as exc:
            raise ConfigError(f"{name}: bad {k}: {exc}") from exc
    return out


def _factor(text: str) -> dm.Domain:
    name, _, body = text.strip().partition(":")
    p = _params(body)
    poly = parse_polynomial
    if name == "disc":
        _take(p, name, {})
        return dm.Disc()
    if name == "punctured-disc":
        _take(p, name, {})
        return dm.PuncturedDisc()
    if name == "hartogs":
        _take(p, name, {})
        return dm.Hartogs()
    if name == "ball":
        return dm.Ball(**_take(p, name, {"n": (int, 2)}))
    if name == "polydisc":
        return dm.Polydisc(**_take(p, name, {"n": (int, 2)}))
    if name == "egg2":
        return dm.EggC2(**_take(p, name, {"mu": (float, 2.0)}))
    if name == "egg":
        return dm.EggHi(**_take(p, name, {"n": (int, 2), "m": (float, 2.0)}))
    if name == "model":
        a = _take(p, name, {"n": (int, 2), "P": (poly, None)})
        return dm.Model(a["P"] or MixedPolynomial.modulus_power(1), a["n"])
    if name == "siegel":
        a = _take(p, name, {"m": (float, 1.0), "Q1": (poly, None)})
        return dm.SiegelCorner(a["Q1"] or MixedPolynomial.modulus_power(1), a["m"])
    if name == "corner":
        return dm.HalfPlaneCorner(**_take(p, name, {"c1": (float, 1.0), "c2": (float, 1.0)}))
    if name == "polyhedral":
        keep = (lambda s: None if s.strip() == "none" else poly(s))
        a = _take(p, name, {"Q1": (keep, None), "Q2": (keep, None)})
        Q1 = a["Q1"] if "Q1" in p else MixedPolynomial.modulus_power(1)
        Q2 = a["Q2"] if "Q2" in p else MixedPolynomial.modulus_power(1)
        pieces = [dm.QuadraticPiece(s, Q) for s, Q in ((0, Q1), (1, Q2)) if Q is not None]
        return dm.PolyhedralC2(tuple(pieces))
    raise ConfigError(f"unknown domain {name!r}")


def parse_domain(text: str) -> dm.Domain:
    """Domain from its string form (grammar in the module docstring)."""
    if not text:
        raise ConfigError("missing domain")
    parts = [t for t in text.split("|")]
    D = _factor(parts[0])
    for t in parts[1:]:
        D = dm.Product(D, _factor(t))
    return D


# ------------------------------------------------------------------ output

def fmt_num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _point_cols(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i + 1}_{part}" for i in range(n) for part in ("re", "im")]


def _point_vals(z) -> list[float]:
    return [v for x in np.asarray(z, complex).ravel() for v in (x.real, x.imag)]


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_num(x) for x in r])
    path.write_text(buf.getvalue(), encoding="ascii")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(doc: dict, out=None) -> None:
    text = json.dumps(_jsonable(doc), sort_keys=True)
    print(text)
    if out is not None:
        (out / "summary.json").write_text(text + "\n", encoding="ascii")


def _outdir(cfg: RunConfig) -> Path:
    p = Path(cfg.get("out"))
    p.mkdir(parents=True, exist_ok=True)
    (p / "config.txt").write_text(cfg.to_text(), encoding="ascii")
    return p


# ------------------------------------------------------------------ commands

def _opts(cfg: RunConfig) -> dict:
    seed = cfg.get("seed")
    return {
        "seed": 0 if seed is None else seed,
        "points": cfg.get("points"),
        "degree": cfg.get("degree"),
        "samples": cfg.get("samples"),
        "nodes": cfg.get("nodes"),
        "solver": {"degree": cfg.get("disc_degree"), "restarts": cfg.get("restarts")},
    }


def _deterministic(D, method: str) -> bool:
    return method != "numeric" and bg.has_closed_kernel(D) and iv.kb.has_closed_indicatrix(D)


def _need_seed(cfg: RunConfig, stochastic: bool) -> None:
    if stochastic and cfg.get("seed") is None:
        raise ConfigError("this run draws random numbers: give seed=...")


def _need(cfg: RunConfig, key: str):
    v = cfg.get(key)
    if v is None:
        raise ConfigError(f"missing {key}")
    return v


def cmd_fk(cfg: RunConfig) -> int:
    D = parse_domain(_need(cfg, "domain"))
    z = parse_point(_need(cfg, "point"))
    if len(z) != D.n:
        raise ConfigError(f"point has {len(z)} coordinates, domain has dimension {D.n}")
    method = cfg.get("method")
    _need_seed(cfg, not _deterministic(D, method))
    r = iv.fk_eval(D, z, method, **_opts(cfg))
    doc = r.to_json()
    doc["schema"] = SCHEMA_VERSION
    _emit(doc)
    return 0


def _pmap(cfg: RunConfig, f, items) -> list:
    threads = max(1, cfg.get("threads"))
    if threads == 1:
        return [f(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(f, items))


def cmd_scan(cfg: RunConfig) -> int:
    D = parse_domain(_need(cfg, "domain"))
    kind = cfg.get("scan")
    method = cfg.get("method")
    opts = _opts(cfg)
    if kind == "localization":
        if not isinstance(D, dm.Ball):
            raise ConfigError("localization scans run on ball:n=...")
        _need_seed(cfg, True)
        b = parse_point(_need(cfg, "boundary"))
        ds = np.geomspace(cfg.get("d_max"), cfg.get("d_min"), cfg.get("steps"))
        tr = iv.localization_experiment(b, cfg.get("cut"), ds, n=D.n, **opts)
        out = _outdir(cfg)
        write_csv(out / "trace.csv", ["j", "distance", "ratio", "sigma"],
                  [(j, d, r, s) for j, (d, r, s) in enumerate(zip(tr.distances, tr.ratios, tr.sigmas))])
        _emit({"schema": SCHEMA_VERSION, "command": "scan", "scan": kind, "domain": D.label,
               "last_ratio": tr.ratios[-1], "last_sigma": tr.sigmas[-1]}, out)
        return 0
    if kind == "bounds":
        _need_seed(cfg, True)
        pts = iv.sample_interior(D, cfg.get("count"), cfg.get("seed"))
    else:
        a = parse_point(_need(cfg, "start"))
        b = parse_point(_need(cfg, "stop"))
        if len(a) != D.n or len(b) != D.n:
            raise ConfigError("segment end points must match the domain dimension")
        _need_seed(cfg, not _deterministic(D, method))
        pts = [a + t * (b - a) for t in np.linspace(0, 1, cfg.get("steps"))]
    res = _pmap(cfg, lambda z: iv.fk_eval(D, z, method, **opts), pts)
    out = _outdir(cfg)
    header = ["j"] + _point_cols("z", D.n) + ["kernel", "indicatrix", "value", "sigma", "method_kernel",
                                              "method_indicatrix"]
    write_csv(out / "trace.csv", header,
              [[j] + _point_vals(z) + [r.kernel, r.indicatrix, r.value, r.sigma, r.method_kernel, r.method_indicatrix]
               for j, (z, r) in enumerate(zip(pts, res))])
    vals = np.array([r.value for r in res])
    doc = {"schema": SCHEMA_VERSION, "command": "scan", "scan": kind, "domain": D.label, "rows": len(res),
           "min": vals.min(), "max": vals.max()}
    if kind == "bounds":
        top = 4.0**D.n
        doc["violations"] = int(sum(1 for r in res if r.value < 1 - 3 * r.sigma - 1e-12
                                    or r.value > top + 3 * r.sigma + 1e-12))
    _emit(doc, out)
    return 0


def cmd_scale_study(cfg: RunConfig) -> int:
    D = parse_domain(_need(cfg, "domain"))
    b = parse_point(_need(cfg, "boundary"))
    approach = cfg.get("approach")
    steps, lo, hi = cfg.get("steps"), cfg.get("d_min"), cfg.get("d_max")
    if approach == "radial":
        pts, limit_approach = sc.radial_points(b, steps, lo, hi), "normal"
    elif approach == "tangential":
        if not isinstance(D, dm.EggC2) or not np.allclose(b, [1, 0]):
            raise ConfigError("the tangential family is defined for egg2 toward 1,0")
        pts, limit_approach = sc.egg_tangential_points(D.mu, cfg.get("c"), steps, lo, hi), "tangential"
    else:
        raise ConfigError("scale-study supports approach=radial or tangential")
    method = cfg.get("method")
    budget = dict(_opts(cfg), method=method)
    _need_seed(cfg, method == "numeric")
    res = sc.fk_scale_study(D, pts, b, limit_approach, budget=budget, gaps=cfg.get("gaps"), gap_grid=cfg.get("gap_grid"))
    out = _outdir(cfg)
    header = ["j", "eps"] + _point_cols("p", D.n) + ["kernel", "indicatrix", "value", "sigma", "gap", "error"]
    write_csv(out / "trace.csv", header,
              [[s.index, s.eps] + _point_vals(p) + [s.kernel, s.indicatrix, s.value, s.sigma, s.gap, s.error or ""]
               for s, p in zip(res.steps, pts)])
    doc = res.to_json()
    doc.update(schema=SCHEMA_VERSION, command="scale-study", approach=approach)
    try:
        doc["trend"] = list(res.trend_estimate())
    except sc.ScalingError as exc:
        doc["trend"] = None
        doc["notes"].append(str(exc))
    _emit(doc, out)
    return 0


def polyhedral_points(D: dm.PolyhedralC2, approach: str, steps: int, d_min: float, d_max: float, c: float):
    """Points (i a, i b) approaching the corner with the requested relative rates.

    radial: a = b = t.  tangential: b = t, a = Q1(i t) + t^3 (hugs the first piece).
    mixed: b = t, a = Q1(i t) + c^2 t^2, so that sqrt(lam)/mu tends to about c.
    """
    by = {p.sigma: p for p in D.pieces}
    if set(by) != {0, 1}:
        raise ConfigError("polyhedral studies need two pieces")
    Q1, Q2 = by[0].Q, by[1].Q
    out = []
    for t in np.geomspace(d_max, d_min, steps):
        if approach == "radial":
            a = b = t
        elif approach == "tangential":
            b = t
            a = float(Q1(1j * t).real) + t**3
        else:
            b = t
            a = float(Q1(1j * t).real) + c * c * t * t
        b = max(b, float(Q2(1j * a).real) + t**3)
        out.append(np.array([1j * a, 1j * b]))
    return out


def cmd_polyhedral(cfg: RunConfig) -> int:
    D = parse_domain(_need(cfg, "domain"))
    if not isinstance(D, dm.PolyhedralC2):
        raise ConfigError("polyhedral studies take a polyhedral:... domain")
    _need_seed(cfg, True)
    pts = polyhedral_points(D, cfg.get("approach"), cfg.get("steps"), cfg.get("d_min"), cfg.get("d_max"), cfg.get("c"))
    st = ph.polyhedral_study(D, pts, cfg.get("window"), cfg.get("tol"), steps=cfg.get("eval_steps"), **_opts(cfg))
    out = _outdir(cfg)
    write_csv(out / "trace.csv", ["j", "lam", "mu", "lam_over_mu", "sqrt_lam_over_mu", "value", "sigma"],
              [list(r) + [s] for r, s in zip(st.rows(), st.sigmas)])
    c = st.cls
    _emit({"schema": SCHEMA_VERSION, "command": "polyhedral", "domain": D.label, "class": c.kind, "near": c.near,
           "m": c.m, "exponent": c.exponent, "reason": c.reason, "predicted": st.predicted.expected,
           "limit": st.predicted.domain.label, "trend_gap": st.gap, "notes": st.notes}, out)
    return 0


def cmd_ramadanov(cfg: RunConfig) -> int:
    n = cfg.get("n")
    base = dm.Ball(n) if cfg.get("family") == "balls" else dm.Polydisc(n)
    z = parse_point(cfg.get("point") or ",".join(["0"] * n))
    if len(z) != n:
        raise ConfigError("point dimension does not match n")
    _need_seed(cfg, True)  # probe sets are random
    js = cfg.get("js")
    if min(js) < 2:
        raise ConfigError("js must be >= 2 (radius 1 - 1/j)")
    rep = bg.ramadanov_experiment(lambda j: dm.Affine(base, 1.0 - 1.0 / j), base, z, js,
                                  seed=cfg.get("seed"))
    out = _outdir(cfg)
    write_csv(out / "trace.csv", ["j", "kernel", "gap"], list(zip(rep.js, rep.values, rep.gaps)))
    g = np.asarray(rep.gaps)
    _emit({"schema": SCHEMA_VERSION, "command": "ramadanov", "family": cfg.get("family"), "n": n, "limit": rep.limit,
           "slope": rep.slope, "monotone": bool(np.all(np.diff(g) < 0)), "first_inner_j": rep.first_inner_j}, out)
    return 0


HANDLERS = {"fk": cmd_fk, "scan": cmd_scan, "scale-study": cmd_scale_study, "polyhedral": cmd_polyhedral,
            "ramadanov": cmd_ramadanov}


# ------------------------------------------------------------------ entry

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fkinvariant", description="Evaluate F = K * lambda(I) and run the scaling experiments.")
    p.add_argument("--version", action="store_true", help="print package and schema version")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", help="key=value config file; flags override it")
    for k, (_, default, help_) in KEYS.items():
        if k == "command":
            continue
        p.add_argument("--" + k.replace("_", "-"), dest=k, default=None, help=f"{help_} (default {default})")
    return p


def config_from_args(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = RunConfig()
    if args.config:
        try:
            cfg = RunConfig.parse(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if args.command:
        cfg.set("command", args.command)
    for k in KEYS:
        v = getattr(args, k, None) if k != "command" else None
        if v is not None:
            cfg.set(k, v)
    if args.version:
        cfg.values["_version"] = True
    return cfg


def run(cfg: RunConfig) -> int:
    cmd = cfg.get("command")
    if cmd is None:
        raise ConfigError("missing command")
    return HANDLERS[cmd](cfg)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
        if cfg.values.pop("_version", False):
            print(json.dumps({"version": __version__, "schema": SCHEMA_VERSION}))
            return 0
        return run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (dm.DomainError, PolynomialError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # any numerical failure
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
