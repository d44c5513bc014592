import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fkinvariant.core import (MixedPolynomial, PolynomialError, as_cvector, laplacian_nonneg, poly_eval,
                              poly_sup_norm, rng_for, sphere_sample)

ABS2 = MixedPolynomial({(1, 1): 1.0})
RE_SQ = MixedPolynomial({(2, 0): 0.5, (0, 2): 0.5})


def test_poly_eval_modulus_squared():
    assert poly_eval(ABS2, 2.0) == pytest.approx(4.0, abs=1e-15)


def test_poly_eval_real_part_of_square_at_i():
    assert poly_eval(RE_SQ, 1j) == pytest.approx(-1.0, abs=1e-15)


def test_poly_eval_mixed_at_eighth_root():
    P = MixedPolynomial({(2, 2): 1.0}) + RE_SQ
    # oracle: |v|^4 + Re(v^2) with v = e^{i pi/4}: 1 + cos(pi/2)
    assert poly_eval(P, np.exp(1j * np.pi / 4)) == pytest.approx(1.0 + np.cos(np.pi / 2), abs=1e-14)


def test_non_conjugate_coefficients_rejected():
    with pytest.raises(PolynomialError):
        MixedPolynomial({(2, 0): 1.0})


def test_harmonic_flag_rejects_harmonic_terms():
    with pytest.raises(PolynomialError):
        MixedPolynomial({(2, 0): 1.0, (0, 2): 1.0}, no_harmonic=True)


@pytest.mark.parametrize("P, expected", [(ABS2, 1.0), (RE_SQ, 1.0), (MixedPolynomial({(2, 2): 3.0}), 3.0)])
def test_sup_norm(P, expected):
    assert poly_sup_norm(P) == pytest.approx(expected, rel=1e-12)


def test_sup_norm_against_dense_grid():
    P = MixedPolynomial({(2, 2): 1.0, (3, 1): 0.3 + 0.2j, (1, 3): 0.3 - 0.2j})
    th = np.linspace(0, 2 * np.pi, 10**6, endpoint=False)
    oracle = np.abs(P.eval_raw(np.exp(1j * th)).real).max()
    assert poly_sup_norm(P) == pytest.approx(oracle, rel=1e-9)


def test_sup_norm_zero_polynomial():
    assert poly_sup_norm(MixedPolynomial()) == 0.0


def test_sup_norm_needs_homogeneous():
    with pytest.raises(PolynomialError):
        poly_sup_norm(ABS2 + MixedPolynomial({(2, 2): 1.0}))


def test_laplacian_sign_cases():
    assert laplacian_nonneg(ABS2)
    assert laplacian_nonneg(RE_SQ)
    assert not laplacian_nonneg(MixedPolynomial({(2, 2): -1.0}))


def test_sphere_sample_equispaced_circle():
    pts = sphere_sample(1, 4, mode="angles").ravel()
    np.testing.assert_allclose(pts, [1, 1j, -1, -1j], atol=1e-15)


def test_sphere_sample_moments():
    pts = sphere_sample(2, 10**5, seed=3)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    assert abs(np.mean(np.abs(pts[:, 0]) ** 2) - 0.5) < 0.01
    assert abs(np.mean(pts[:, 0])) < 3 / np.sqrt(10**5)


def test_sphere_sample_deterministic():
    np.testing.assert_array_equal(sphere_sample(3, 50, seed=9), sphere_sample(3, 50, seed=9))
    assert not np.array_equal(sphere_sample(3, 50, seed=9), sphere_sample(3, 50, seed=10))


def test_rng_streams_independent():
    a = rng_for(1, 0).random(5)
    b = rng_for(1, 1).random(5)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, rng_for(1, 0).random(5))


def test_as_cvector_checks():
    assert as_cvector([1, 2j]).dtype == complex
    with pytest.raises(ValueError):
        as_cvector([np.nan])
    with pytest.raises(ValueError):
        as_cvector([1, 2], n=3)


coef = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(a=coef, b=coef, c=coef, x=st.floats(-2, 2), y=st.floats(-2, 2))
def test_real_valued_on_the_plane(a, b, c, x, y):
    P = MixedPolynomial({(1, 1): a, (2, 0): b + 1j * c, (0, 2): b - 1j * c})
    v = complex(x, y)
    direct = a * abs(v) ** 2 + 2 * ((b + 1j * c) * v * v).real
    assert poly_eval(P, v) == pytest.approx(direct, abs=1e-12 * (1 + abs(direct)))


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.1, 3), p=st.integers(1, 4), t=st.floats(0.1, 3))
def test_dilate_is_composition(a, p, t):
    P = MixedPolynomial.modulus_power(p, a)
    v = 0.3 + 0.4j
    assert P.dilate(t)(v) == pytest.approx(P(t * v), rel=1e-12)
