from math import e, exp, log, pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fkinvariant import domains as dm
from fkinvariant import kobayashi as kb
from fkinvariant.core import MixedPolynomial


def test_closed_metric_examples():
    assert kb.kobayashi_closed(dm.Disc(), [0], [1]) == pytest.approx(1.0, abs=1e-15)
    assert kb.kobayashi_closed(dm.PuncturedDisc(), [exp(-1)], [1]) == pytest.approx(e / 2, rel=1e-14)
    assert kb.kobayashi_closed(dm.Polydisc(2), [0, 0], [1, 1]) == pytest.approx(1.0, abs=1e-15)


def test_punctured_disc_from_covering_map():
    # universal cover exp: left half plane -> punctured disc; metric of the half plane
    # {Re w < 0} is |dw|/(2|Re w|), dw = dz/z
    z = 0.3 + 0.2j
    oracle = 1 / (abs(z) * 2 * abs(log(abs(z))))
    assert kb.kobayashi_closed(dm.PuncturedDisc(), [z], [1]) == pytest.approx(oracle, rel=1e-13)


def test_ball_metric_from_automorphism_formula():
    z = np.array([0.3, 0.4j])
    v = np.array([0.2 + 0.1j, -0.5])
    s = 1 - np.vdot(z, z).real
    oracle = np.sqrt(np.vdot(v, v).real / s + abs(np.vdot(z, v)) ** 2 / s**2)
    assert kb.kobayashi_closed(dm.Ball(2), z, v) == pytest.approx(oracle, rel=1e-13)


@pytest.mark.parametrize("D, z, v", [(dm.Disc(), [0], [1]), (dm.Ball(2), [0, 0], [1, 0]), (dm.EggC2(2), [0, 0], [0, 1])])
def test_affine_bracket_at_center(D, z, v):
    b = kb.affine_bracket(D, z, v)
    assert b.lower == pytest.approx(0.5, rel=1e-9)
    assert b.upper == pytest.approx(1.0, rel=1e-9)


def test_affine_bracket_needs_convexity():
    with pytest.raises(kb.MetricError):
        kb.affine_bracket(dm.Hartogs(), [0.5, 0.1], [1, 0])


def test_extremal_disc_identity():
    r = kb.extremal_disc(dm.Disc(), [0], [1], degree=4, restarts=2)
    assert r.metric == pytest.approx(1.0, abs=1e-6)
    assert r.feasible and r.bracket_ok


def test_extremal_disc_ball_off_center():
    # the extremal is a Moebius map with coefficients 0.5^k: degree 16 truncates below 1e-4
    r = kb.extremal_disc(dm.Ball(2), [0.5, 0], [1, 0], degree=16, restarts=2)
    assert r.metric == pytest.approx(4 / 3, abs=1e-4)


def _egg_gauge(v):
    # Minkowski gauge of {|v1|^2 + |v2|^4 < 1}: positive root x = h^2 of x^2 - |v1|^2 x - |v2|^4
    a, b = abs(v[0]) ** 2, abs(v[1]) ** 4
    return np.sqrt((a + np.sqrt(a * a + 4 * b)) / 2)


@pytest.mark.parametrize("v", [[1, 0], [0, 1], [0.6, 0.8j]])
def test_extremal_disc_egg_center(v):
    # balanced domain: k(0, v) is the gauge of v, equal to 1 for unit axis directions
    r = kb.extremal_disc(dm.EggC2(2), [0, 0], v, degree=8, restarts=4)
    assert r.metric == pytest.approx(_egg_gauge(v), abs=1e-4)


def test_egg_closed_metric_reduces_to_ball():
    z = np.array([0.2, 0.5 + 0.1j])
    v = np.array([1.0, 0.3j])
    assert kb.egg_metric(1.0, z, v[None, :])[0] == pytest.approx(kb.kobayashi_closed(dm.Ball(2), z, v), rel=1e-12)


def test_egg_closed_metric_vs_optimiser():
    z, v = [0.3, 0.5], [0.4, 1.0]
    exact = kb.kobayashi_closed(dm.EggC2(2), z, v)
    num = kb.extremal_disc(dm.EggC2(2), z, v, degree=10, restarts=4).metric
    # discs give upper estimates of the infimum
    assert exact <= num * (1 + 1e-6)
    assert num == pytest.approx(exact, rel=5e-3)


def test_extremal_in_chart_on_corner():
    D = dm.HalfPlaneCorner(1.0, 1.0)
    r = kb.extremal_in_chart(D, [0, 0], [1, 0], degree=6, restarts=2)
    assert r.metric == pytest.approx(kb.kobayashi_closed(D, [0, 0], [1, 0]), rel=1e-4)


def test_disc_indicatrix_volume():
    for r in (0.0, 0.5):
        est = kb.indicatrix_volume(dm.Disc(), [r], mode="product", metric="closed", nodes=(64, 1))
        assert est.volume == pytest.approx(pi * (1 - r * r) ** 2, rel=1e-12)


def test_egg_volume_two_oracles():
    # balanced centre: the indicatrix is the egg itself
    vol_q = kb.domain_volume_quadrature(dm.EggC2(2))
    vol_closed = kb.domain_volume(dm.EggC2(2))
    oracle, _ = quad(lambda r: 2 * pi**2 * r * (1 - r * r) ** 0.5, 0, 1, epsabs=1e-15)
    assert vol_closed == pytest.approx(oracle, rel=1e-10)
    assert vol_q == pytest.approx(oracle, rel=1e-6)


def test_egg_indicatrix_closed_vs_product_quadrature():
    z = [0.3, 0.4]
    v, _ = kb.indicatrix_closed(dm.EggC2(2), z)
    q = kb.indicatrix_volume(dm.EggC2(2), z, mode="product", metric="closed", nodes=(48, 32))
    assert q.volume == pytest.approx(v, rel=1e-5)


@pytest.mark.parametrize("D, z, oracle", [
    (dm.Ball(2), [0.3, 0.2j], (pi**2 / 2) * (1 - 0.13) ** 3),
    (dm.Polydisc(2), [0.3, 0.5], pi**2 * (1 - 0.09) ** 2 * (1 - 0.25) ** 2),
])
def test_closed_indicatrix_formulas(D, z, oracle):
    assert kb.indicatrix_closed(D, z)[0] == pytest.approx(oracle, rel=1e-13)


def test_mc_mode_within_error():
    est = kb.indicatrix_volume(dm.Ball(2), [0.2, 0.1], mode="mc", metric="closed", samples=4000, seed=5)
    exact = kb.indicatrix_closed(dm.Ball(2), [0.2, 0.1])[0]
    assert abs(est.volume - exact) < 4 * est.stderr


def test_m_metric_siegel_base_direction():
    from fkinvariant.scaling import identity_normal_form

    NF = identity_normal_form(MixedPolynomial.modulus_power(1))
    # the point b = ('0, -1) sits at eps = 1 below the origin
    s, mx = kb.m_metric(NF, np.array([0, -1]), np.array([0, 1]))
    assert s == pytest.approx(1.0, abs=1e-14)
    assert mx == pytest.approx(1.0, abs=1e-14)


def test_m_metric_off_normal_line():
    from fkinvariant.scaling import identity_normal_form

    NF = identity_normal_form(MixedPolynomial.modulus_power(1))
    with pytest.raises(kb.MetricError):
        kb.m_metric(NF, np.array([0.1, -1]), np.array([0, 1]))


def test_ball_comparability():
    st_ = kb.comparability_probe(dm.Ball(2), [np.array([0, 1])], [1e-1, 1e-2, 1e-3],
                                 [np.array([1, 0]), np.array([0, 1]), np.array([1, 1]) / np.sqrt(2)])
    assert st_.C_star < 10


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-0.6, 0.6), y=st.floats(-0.6, 0.6), a=st.floats(-3, 3), b=st.floats(-3, 3),
       vr=st.floats(-1, 1), vi=st.floats(-1, 1))
def test_homogeneity(x, y, a, b, vr, vi):
    z = [complex(x, 0.1), complex(y, -0.1)]
    v = np.array([complex(vr, vi), 1.0])
    c = complex(a, b)
    for D in (dm.Ball(2), dm.EggC2(2), dm.Polydisc(2)):
        if not dm.contains(D, z):
            continue
        assert kb.kobayashi_closed(D, z, c * v) == pytest.approx(abs(c) * kb.kobayashi_closed(D, z, v), rel=1e-9, abs=1e-12)
