from math import pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad

from fkinvariant import bergman as bg
from fkinvariant import domains as dm
from fkinvariant.core import MixedPolynomial


def _egg_volume_oracle(mu):
    # radial coordinates: vol = 4 pi^2 * int_0^1 r (1 - r^2)^(1/mu) / 2 dr
    v, _ = dblquad(lambda s, r: 4 * pi**2 * r * s, 0, 1, 0, lambda r: (1 - r * r) ** (1 / (2 * mu)), epsabs=1e-14)
    return v


def test_closed_values_at_center():
    assert bg.bergman_closed(dm.Disc(), [0]) == pytest.approx(1 / pi, rel=1e-15)
    assert bg.bergman_closed(dm.Ball(2), [0, 0]) == pytest.approx(2 / pi**2, rel=1e-15)
    assert bg.bergman_closed(dm.Polydisc(2), [0, 0]) == pytest.approx(1 / pi**2, rel=1e-15)


def test_ball_center_matches_series():
    r = bg.bergman_reinhardt(dm.Ball(2), [0, 0])
    assert r.value == pytest.approx(2 / pi**2, rel=1e-14)


def test_disc_series_off_center():
    r = bg.bergman_reinhardt(dm.Disc(), [0.5], degree_cap=4000)
    assert r.value == pytest.approx(1 / (pi * 0.75**2), rel=1e-11)


def test_egg_norm_unit_exponent_is_ball_volume():
    assert bg.monomial_norm_egg(dm.EggC2(1), (0, 0)) == pytest.approx(pi**2 / 2, rel=1e-14)


@pytest.mark.parametrize("alpha", [(0, 0), (1, 0), (0, 2), (3, 1)])
def test_egg_norms_against_quadrature(alpha):
    D = dm.EggC2(2)
    assert bg.monomial_norm_egg(D, alpha) == pytest.approx(bg.monomial_norm_quadrature(D, alpha), rel=1e-10)


def test_egg_center_kernel_is_inverse_volume():
    vol = _egg_volume_oracle(2.0)
    assert bg.monomial_norm_egg(dm.EggC2(2), (0, 0)) == pytest.approx(vol, rel=1e-10)
    assert bg.bergman_reinhardt(dm.EggC2(2), [0, 0]).value == pytest.approx(1 / vol, rel=1e-10)
    assert bg.bergman_closed(dm.EggC2(2), [0, 0]) == pytest.approx(1 / vol, rel=1e-10)


@pytest.mark.parametrize("z", [[0.3, 0.4], [0.6j, -0.5], [0.1, 0.85]])
def test_egg_closed_against_series(z):
    D = dm.EggC2(2)
    s = bg.bergman_reinhardt(D, z, degree_cap=400)
    assert bg.bergman_closed(D, z) == pytest.approx(s.value, rel=1e-9)


def test_siegel_kernel_through_cayley():
    # {2 Re z2 + |z1|^2 < 0}: K = 2/(pi^2 r^3) with r = -(2 Re z2 + |z1|^2)
    D = dm.Model(MixedPolynomial.modulus_power(1))
    z = np.array([0.3 + 0.1j, -0.7 + 0.2j])
    r = -(2 * z[1].real + abs(z[0]) ** 2)
    assert bg.bergman_closed(D, z) == pytest.approx(2 / (pi**2 * r**3), rel=1e-13)


def test_quartic_model_via_egg_matches_series_on_image():
    M = dm.Model(MixedPolynomial.modulus_power(2))
    E = dm.model_as_egg(M)
    z = np.array([0.2, -0.6 + 0.1j])
    u = E.to_base(z[None, :])[0]
    J = np.linalg.det(E.to_base_jac(z[None, :])[0])
    series = bg.bergman_reinhardt(dm.EggC2(2), u, degree_cap=400).value
    assert bg.bergman_closed(M, z) == pytest.approx(series * abs(J) ** 2, rel=1e-9)


def test_gram_on_ball_and_polydisc():
    g = bg.bergman_gram(dm.Ball(2), [0.2, 0.1], degree=10, points=2**16, seed=1)
    assert g.value == pytest.approx(bg.bergman_closed(dm.Ball(2), [0.2, 0.1]), rel=0.02)


def test_truncated_is_non_increasing_and_above_limit():
    D = dm.Model(MixedPolynomial.modulus_power(1))
    z = [0, -1]
    t = bg.bergman_truncated(D, z, (2.0, 4.0, 8.0), degree=6, points=2**16, seed=0)
    assert all(a >= b for a, b in zip(t.values, t.values[1:]))
    # truncations are subsets, so each kernel dominates the full one (up to the basis error)
    assert t.values[-1] >= 0.9 * bg.bergman_closed(D, z)


def test_ramadanov_shrinking_balls_slope():
    js = list(range(4, 65))
    rep = bg.ramadanov_experiment(lambda j: dm.Affine(dm.Ball(2), 1 - 1 / j), dm.Ball(2), [0, 0], js, seed=0)
    assert rep.limit == pytest.approx(2 / pi**2)
    assert np.all(np.diff(rep.gaps) < 0)
    assert rep.slope == pytest.approx(-1.0, abs=0.2)


def test_ramadanov_constant_family_has_zero_gap():
    rep = bg.ramadanov_experiment(lambda j: dm.Ball(2), dm.Ball(2), [0.1, 0], [2, 4, 8], seed=0)
    assert rep.gaps == [0.0, 0.0, 0.0]


def test_ramadanov_translated_discs_need_translation():
    rep = bg.ramadanov_experiment(lambda j: dm.Affine(dm.Disc(), 1 + 2 / j, (1 / j,)), dm.Disc(), [0], [4, 16, 64],
                                  direction=[1.0], seed=0)
    assert rep.gaps[-1] < rep.gaps[0]
    assert rep.gaps[-1] < 0.05


def test_ramadanov_condition_violation_raises():
    with pytest.raises(bg.KernelError):
        bg.ramadanov_experiment(lambda j: dm.Affine(dm.Ball(2), 0.5), dm.Ball(2), [0, 0], [2, 4], seed=0)


def test_norm_table_cache_roundtrip(tmp_path):
    T = bg.MonomialNormTable.build(dm.EggC2(2), 6)
    p = tmp_path / "t.npz"
    T.save(p)
    L = bg.MonomialNormTable.load(p, T.domain_id, 6)
    np.testing.assert_array_equal(L.log_norms, T.log_norms)
    assert bg.MonomialNormTable.load(p, T.domain_id, 7) is None


@settings(max_examples=30, deadline=None)
@given(r=st.floats(0.05, 0.9), t=st.floats(0, 2 * pi))
def test_disc_kernel_matches_series(r, t):
    z = [r * np.exp(1j * t)]
    s = bg.bergman_reinhardt(dm.Disc(), z, degree_cap=4000)
    assert s.value == pytest.approx(bg.bergman_closed(dm.Disc(), z), rel=1e-9)
