import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fkinvariant import domains as dm
from fkinvariant.core import MixedPolynomial

ABS2 = MixedPolynomial.modulus_power(1)
ABS4 = MixedPolynomial.modulus_power(2)


def test_contains_examples():
    assert dm.contains(dm.Disc(), [0])
    assert not dm.contains(dm.Hartogs(), [0.5, 0.6])
    assert dm.contains(dm.Hartogs(), [0.5, 0.4])
    assert dm.contains(dm.Model(ABS4), [0, -1])
    assert not dm.contains(dm.PuncturedDisc(), [0])


def test_defining_values_examples():
    assert dm.defining_values(dm.Ball(2), [1, 0]) == pytest.approx([0.0], abs=1e-15)
    assert dm.defining_values(dm.EggC2(2), [0.5, 0.5]) == pytest.approx([0.25 + 0.0625 - 1], abs=1e-15)


def test_polyhedral_common_boundary_point():
    D = dm.PolyhedralC2((dm.QuadraticPiece(0, ABS2), dm.QuadraticPiece(1, ABS2)))
    assert dm.defining_values(D, [0, 0]) == pytest.approx([0.0, 0.0], abs=1e-15)


def _affine_corner():
    return dm.PolyhedralC2((dm.QuadraticPiece(0, MixedPolynomial()), dm.QuadraticPiece(1, MixedPolynomial())))


@pytest.mark.parametrize("a, b", [(0.3, 0.7), (1e-3, 2.0), (1.0, 1.0)])
def test_piece_distance_affine_pieces(a, b):
    D = _affine_corner()
    z = [1j * a, 1j * b]
    assert dm.piece_distance(D, z, 0) == pytest.approx(a, rel=1e-12)
    assert dm.piece_distance(D, z, 1) == pytest.approx(b, rel=1e-12)


def test_piece_distance_radial_sequence():
    D = _affine_corner()
    for j in range(1, 20):
        z = [1j / j, 1j / j]
        assert dm.piece_distance(D, z, 0) == pytest.approx(1 / j, rel=1e-12)
        assert dm.piece_distance(D, z, 1) == pytest.approx(1 / j, rel=1e-12)


@pytest.mark.parametrize("t", [0.01, 0.2, 1.5])
def test_piece_distance_paraboloid_on_axis(t):
    D = dm.PolyhedralC2((dm.QuadraticPiece(0, ABS2),))
    # closest point of {Im z1 = |z2|^2} to (i t, 0) is the vertex when t <= 1/2,
    # else on the circle |z2|^2 = t - 1/2 at distance sqrt(t - 1/4)
    oracle = t if t <= 0.5 else np.sqrt(t - 0.25)
    assert dm.piece_distance(D, [1j * t, 0], 0) == pytest.approx(oracle, rel=1e-9)


def test_truncation_monotone_and_bounded(rng):
    M = dm.Model(ABS4)
    T1, T2 = dm.truncate(M, 1.0), dm.truncate(M, 2.0)
    Z = 2.5 * (rng.uniform(-1, 1, (20000, 2)) + 1j * rng.uniform(-1, 1, (20000, 2)))
    in1, in2 = T1.inside(Z), T2.inside(Z)
    assert in1.any() and np.all(in2[in1])
    S = dm.truncate(dm.SiegelCorner(ABS2, 1.0), 1.5)
    assert S.bounded
    inside = S.inside(Z)
    assert np.all(np.linalg.norm(Z[inside], axis=1) < 1.5 + 1e-12)


def test_model_rejects_bad_polynomials():
    with pytest.raises(dm.DomainError):
        dm.Model(MixedPolynomial({(2, 0): 1.0, (0, 2): 1.0}))
    with pytest.raises(dm.DomainError):
        dm.Model(MixedPolynomial({(2, 2): -1.0}))


def test_egg_exponent_bound():
    with pytest.raises(dm.DomainError):
        dm.EggC2(0.5)


def test_product_membership(rng):
    P = dm.Product(dm.Disc(), dm.PuncturedDisc())
    Z = rng.uniform(-1.2, 1.2, (500, 2)) + 0j
    expect = (np.abs(Z[:, 0]) < 1) & (np.abs(Z[:, 1]) < 1) & (Z[:, 1] != 0)
    np.testing.assert_array_equal(P.inside(Z), expect)


def test_model_as_egg_maps_inside_to_inside(rng):
    M = dm.Model(MixedPolynomial.modulus_power(2, 0.7))
    E = dm.model_as_egg(M)
    Z = rng.normal(size=(2000, 2)) + 1j * rng.normal(size=(2000, 2))
    np.testing.assert_array_equal(E.inside(Z), M.inside(Z))


def test_ball_automorphism_involution():
    a = np.array([0.3 + 0.1j, -0.2j])
    phi, jac = dm.ball_automorphism(a)
    np.testing.assert_allclose(phi(a), 0, atol=1e-14)
    np.testing.assert_allclose(phi(np.zeros(2, complex)), a, atol=1e-14)
    z = np.array([0.1, 0.5 + 0.2j])
    np.testing.assert_allclose(phi(phi(z)), z, atol=1e-13)
    h = 1e-6
    num = np.stack([(phi(z + h * e) - phi(z - h * e)) / (2 * h) for e in np.eye(2)], axis=1)
    np.testing.assert_allclose(jac(z), num, atol=1e-8)


def test_convex_by_segments_detects_nonconvex(rng):
    H = dm.Hartogs()
    pts = np.array([[0.5, 0.4], [-0.5, 0.4], [0.5j, 0.4j], [0.8, -0.1]])
    assert not dm.convex_by_segments(H, pts, rng)
    B = dm.Ball(2)
    assert dm.convex_by_segments(B, np.array([[0.5, 0.1], [-0.3, 0.6j], [0, 0]]), rng)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-1, 1), y=st.floats(-1, 1), u=st.floats(-1, 1), v=st.floats(-1, 1))
def test_inside_agrees_with_defining_values(x, y, u, v):
    z = [complex(x, y), complex(u, v)]
    for D in (dm.Ball(2), dm.EggC2(2), dm.Polydisc(2)):
        assert dm.contains(D, z) == (max(dm.defining_values(D, z)) < 0)
