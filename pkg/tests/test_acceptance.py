"""Acceptance criteria 1-12, one summary line each (shown in the terminal summary).

Run alone with:  python3 -m pytest tests/test_acceptance.py -v
"""
import time
from math import exp, log, pi

import numpy as np
import pytest

from fkinvariant import bergman as bg
from fkinvariant import domains as dm
from fkinvariant import invariant as iv
from fkinvariant import kobayashi as kb
from fkinvariant import polyhedral as ph
from fkinvariant import scaling as sc
from fkinvariant.core import MixedPolynomial

ABS2 = MixedPolynomial.modulus_power(1)
ABS4 = MixedPolynomial.modulus_power(2)


def _hartogs_oracle(r):
    return 4 * (r * log(r) / (1 - r * r)) ** 2


def test_c01_disc_identity(criterion):
    t0 = time.perf_counter()
    r = np.linspace(0, 0.95, 50)
    zs = r * np.exp(1j * 2.3 * np.arange(50))
    closed = max(abs(iv.fk_eval(dm.Disc(), [z], "closed").value - 1) for z in zs)
    numeric = max(abs(iv.fk_eval(dm.Disc(), [z], "numeric").value - 1) for z in zs)
    dt = time.perf_counter() - t0
    ok = closed <= 1e-12 and numeric <= 0.02 and dt < 60
    criterion(1, ok, f"closed max|F-1|={closed:.2e} numeric max|F-1|={numeric:.2e} time={dt:.1f}s")
    assert ok


def test_c02_hartogs(criterion):
    t0 = time.perf_counter()
    g = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        r = g.uniform(0.02, 0.98)
        z = r * np.exp(1j * g.uniform(0, 2 * pi))
        w = z * g.uniform(0, 0.99) * np.exp(1j * g.uniform(0, 2 * pi))
        worst = max(worst, abs(iv.fk_hartogs_pipeline(z, w) / _hartogs_oracle(r) - 1))
    ts = np.linspace(0.05, 40, 200)
    vals = np.array([iv.fk_hartogs_pipeline(exp(-t), 0.5 * exp(-t)) for t in ts])
    mono = bool(np.all(np.diff(vals) < 0))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and mono and vals[-1] < 1e-30 and dt < 10
    criterion(2, ok, f"pipeline rel err={worst:.1e} monotone={mono} F(e^-40)={vals[-1]:.1e} time={dt:.2f}s")
    assert ok


def test_c03_center_values(criterion):
    t0 = time.perf_counter()
    ball = iv.fk_eval(dm.Ball(2), [0, 0]).value
    poly = iv.fk_eval(dm.Polydisc(2), [0, 0]).value
    E = dm.EggC2(2)
    v_gamma = kb.domain_volume(E)
    v_quad = kb.domain_volume_quadrature(E)
    K0 = bg.bergman_reinhardt(E, [0, 0]).value
    prod = K0 * v_quad
    dt = time.perf_counter() - t0
    ok = (abs(ball - 1) < 1e-12 and abs(poly - 1) < 1e-12 and abs(v_gamma / v_quad - 1) < 1e-6
          and abs(prod - 1) < 1e-4 and dt < 300)
    criterion(3, ok, f"ball={ball:.15f} polydisc={poly:.15f} egg vol oracles rel gap={abs(v_gamma / v_quad - 1):.1e} "
                     f"K(0)*vol={prod:.12f} time={dt:.1f}s")
    assert ok


def test_c04_convex_bracket(criterion):
    t0 = time.perf_counter()
    E = dm.EggC2(2)
    rep = iv.fk_bounds_check(E, count=200, seed=4)
    # optimiser cross-check of the exact metric on a subset; polynomial discs approach the
    # Moebius-like extremals slowly near the boundary, hence degree 16 and a 2% allowance
    g = np.random.default_rng(44)
    worst = 0.0
    below = False
    for z in rep.points[:4]:
        for _ in range(2):
            v = g.normal(size=2) + 1j * g.normal(size=2)
            exact = kb.kobayashi_closed(E, z, v)
            num = kb.extremal_disc(E, z, v, degree=16, restarts=2).metric
            worst = max(worst, abs(num / exact - 1))
            below |= num < exact * (1 - 1e-6)
    dt = time.perf_counter() - t0
    ok = rep.ok and worst < 0.02 and not below and dt < 7200
    criterion(4, ok, f"200 points F in [{rep.lo:.6f}, {rep.hi:.6f}] violations={len(rep.violations)} "
                     f"solver cross-check max rel={worst:.1e} time={dt:.0f}s")
    assert ok


def test_c05_strongly_pseudoconvex_limit(criterion):
    pts = sc.radial_points([0, 1], 10, d_min=1e-3, d_max=0.5)
    res = sc.fk_scale_study(dm.EggC2(2), pts, [0, 1])
    last = res.steps[-1]
    dist = 1 - abs(pts[-1][1])
    ok = abs(last.value - 1) <= 0.05 and res.cauchy_gap < 0.02 and abs(dist - 1e-3) < 1e-12 and len(res.steps) == 10
    criterion(5, ok, f"last F={last.value:.10f} cauchy gap={res.cauchy_gap:.1e} limit model {res.limit_label}")
    assert ok


def test_c06_weak_point_no_limit(criterion):
    E = dm.EggC2(2)
    rad = sc.fk_scale_study(E, sc.radial_points([1, 0], 10, 1e-3, 0.5), [1, 0])
    c = 0.1
    tan = sc.fk_scale_study(E, sc.egg_tangential_points(2.0, c, 10, 1e-3, 0.5), [1, 0], "tangential")
    v_r, s_r = rad.trend_estimate()
    v_t, s_t = tan.trend_estimate()
    # independent value on the tangential family: product quadrature of the exact metric
    q = kb.indicatrix_volume(E, [0, c**0.25], mode="product", metric="closed", nodes=(64, 32))
    v_q = bg.bergman_closed(E, [0, c**0.25]) * q.volume
    s_t = max(s_t, abs(v_q - v_t) + q.stderr * v_t / q.volume)
    ok = abs(v_r - v_t) > s_r + s_t
    criterion(6, ok, f"radial {v_r:.8f}+-{s_r:.1e} vs tangential(c={c}) {v_t:.8f}+-{s_t:.1e}")
    assert ok


def test_c07_scaling_engine(criterion):
    cubic = MixedPolynomial({(2, 1): 1.0, (1, 2): 1.0})
    NF = sc.NormalFormData(np.zeros(2, complex), np.array([0, 1], complex), {2: ABS2.scaled(1e-3), 3: cubic, 4: ABS4}, 2)
    tau_err = 0.0
    for d in np.geomspace(1e-1, 1e-12, 23):
        hand = min((d / 1e-3) ** 0.5, (d / 2) ** (1 / 3), d**0.25)
        tau_err = max(tau_err, abs(sc.tau(NF, d) / hand - 1))
    P = MixedPolynomial({(2, 2): 1.0, (3, 1): 0.25, (1, 3): 0.25}).scaled(1 / 1.5)
    gaps = []
    for Q in (ABS4, P):
        M = dm.Model(Q)
        steps = sc.scale_sequence(M, [np.array([0, -d]) for d in np.geomspace(0.5, 1e-3, 6)], [0, 0])
        for s in steps:
            gap, h = sc.hausdorff_gap(s.domain, M, s.base_point, half=2.0, N=20)
            gaps.append(gap / h)
    ok = tau_err <= 1e-12 and max(gaps) < 1.0
    criterion(7, ok, f"tau max rel err={tau_err:.1e}; model fixed point max gap/grid={max(gaps):.2f} over {len(gaps)} steps")
    assert ok


def test_c08_factor_consistency(criterion):
    B = dm.Ball(2)
    steps = sc.scale_sequence(B, sc.radial_points([0, 1], 10, 1e-3, 0.5), [0, 1])
    ball_err = max(abs(iv.fk_eval(s.domain, s.base_point, "closed").value / iv.fk_eval(B, s.point, "closed").value - 1)
                   for s in steps)
    E = dm.EggC2(2)
    worst = 0.0
    for s in sc.scale_sequence(E, sc.radial_points([0, 1], 10, 1e-3, 0.5), [0, 1]):
        lhs = iv.fk_eval(E, s.point, "closed").value
        q = kb.indicatrix_volume(s.domain, s.base_point, mode="product", metric="closed", nodes=(24, 16))
        rhs = bg.bergman_closed(s.domain, s.base_point) * q.volume
        sigma = rhs * q.stderr / q.volume
        worst = max(worst, abs(lhs - rhs) / max(sigma, 1e-12 * lhs))
    ok = ball_err < 1e-10 and worst <= 3
    criterion(8, ok, f"ball max rel err={ball_err:.1e}; egg max |diff|/sigma={worst:.2f}")
    assert ok


def test_c09_ramadanov(criterion):
    js = list(range(4, 65))
    rep = bg.ramadanov_experiment(lambda j: dm.Affine(dm.Ball(2), 1 - 1 / j), dm.Ball(2), [0, 0], js, seed=9)
    ok = abs(rep.limit - 2 / pi**2) < 1e-15 and rep.gaps[-1] < rep.gaps[0] and abs(rep.slope + 1) <= 0.2
    criterion(9, ok, f"limit={rep.limit:.12f} (2/pi^2={2 / pi**2:.12f}) slope={rep.slope:.3f} over j=4..64")
    assert ok


@pytest.mark.slow
def test_c10_polyhedral(criterion):
    j = np.arange(1, 41, dtype=float)
    k1 = ph.classify(1 / j, 1 / j)
    k2 = ph.classify(1 / j**4, 1 / j)
    k3 = ph.classify(1 / j**2, 1 / j)
    classes_ok = k1.kind == ph.RADIAL and k2.kind == ph.TANGENTIAL and k3.kind == ph.MIXED_A and abs(k3.m - 1) <= 0.01
    D = dm.PolyhedralC2((dm.QuadraticPiece(0, ABS2), dm.QuadraticPiece(1, ABS2)))
    pts = [np.array([1j, 1j]) * t for t in np.geomspace(0.2, 0.002, 12)]
    t0 = time.perf_counter()
    st = ph.polyhedral_study(D, pts, steps=1, seed=10)
    dt = time.perf_counter() - t0
    ok = classes_ok and st.cls.kind == ph.RADIAL and st.predicted.expected == 1.0 and st.gap is not None and st.gap < 0.05
    criterion(10, ok, f"classes {k1.kind}/{k2.kind}/{k3.kind} m={k3.m:.4f}; radial corner F={st.values[-1]:.4f}"
                      f"+-{st.sigmas[-1]:.3f} gap={st.gap} time={dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_c11_siegel_value(criterion):
    t0 = time.perf_counter()
    r = ph.siegel_fk(dm.SiegelCorner(ABS2, 1.0), seed=11)
    dt = time.perf_counter() - t0
    spread = float(r.notes[0].split()[-1])
    ok = 1 <= r.value <= 16 and spread < 0.2
    criterion(11, ok, f"F(Siegel corner, m=1)={r.value:.4f}+-{r.sigma:.4f} truncation spread={spread:.3f} "
                      f"(tool value, no reference number) time={dt:.0f}s")
    assert ok


def test_c12_property_suites(criterion):
    import test_properties as tp

    suites = [tp.test_metric_homogeneity, tp.test_inclusion_monotonicity, tp.test_kernel_product_rule,
              tp.test_metric_max_rule, tp.test_indicatrix_product_rule, tp.test_fk_product_rule,
              tp.test_convex_bracket_contains_metric, tp.test_fk_bounds_on_convex_domains]
    failed = []
    for f in suites:
        try:
            f()
        except Exception as exc:  # report every suite, then fail
            failed.append(f"{f.__name__}: {type(exc).__name__}")
    ok = not failed
    criterion(12, ok, f"{len(suites) - len(failed)}/{len(suites)} property suites green" + (f" failed: {failed}" if failed else ""))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
