import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow.conformal import (INFINITY, CanonicalDomain, ConformalMap, DiskAutomorphism,
                                DomainError, canonical_iso, mobius_apply, mobius_compose,
                                mobius_derivative, mobius_invert, to_disk)

H, D, S = CanonicalDomain.HalfPlane, CanonicalDomain.Disk, CanonicalDomain.Strip

angles = st.floats(-np.pi, np.pi)


@st.composite
def automorphisms(draw):
    r = draw(st.floats(0.0, 0.95))
    arg = draw(angles)
    return DiskAutomorphism(draw(angles), r * np.exp(1j * arg))


def interior_disk(n=20, seed=0):
    rng = np.random.default_rng(seed)
    return np.sqrt(rng.uniform(0, 0.9, n)) * np.exp(2j * np.pi * rng.uniform(size=n))


def test_identity_iso_on_half_plane():
    assert canonical_iso(H, H).apply(1 + 1j) == 1 + 1j


def test_phi_sends_2i_to_origin():
    assert abs(canonical_iso(H, D).apply(2j)) < 1e-15


def test_phi_boundary_assignment_follows_formula():
    phi = canonical_iso(H, D)
    assert abs(phi.apply(0j) - 1) < 1e-15
    assert abs(phi.apply(INFINITY) + 1) < 1e-15
    assert abs(phi.apply(1e12) + 1) < 1e-10


def test_psi_closed_form():
    psi = canonical_iso(H, S)
    z = np.array([0.3 + 1j, -2 + 0.5j, 5j])
    np.testing.assert_allclose(psi.apply(z), np.log((2 + z) / (2 - z)), atol=1e-14)
    assert np.all(S.contains(psi.apply(z)))


@pytest.mark.parametrize("src,dst", [(H, D), (D, H), (H, S), (S, H), (D, S), (S, D)])
def test_iso_round_trip(src, dst):
    pts = canonical_iso(D, src).apply(interior_disk(50))
    there = canonical_iso(src, dst)
    back = canonical_iso(dst, src)
    np.testing.assert_allclose(back.apply(there.apply(pts)), pts, atol=1e-11)
    np.testing.assert_allclose(there.apply_inverse(there.apply(pts)), pts, atol=1e-12)


def test_map_derivative_matches_difference():
    f = canonical_iso(S, D)
    z = np.array([0.4 + 1.1j, -1 + 2j])
    h = 1e-6
    fd = (f.apply(z + h) - f.apply(z - h)) / (2 * h)
    np.testing.assert_allclose(f.derivative(z), fd, rtol=1e-8)


def test_to_disk_of_disk_is_identity():
    assert to_disk(D).tag == "identity"


def test_mobius_examples():
    assert mobius_apply(DiskAutomorphism(0, 0), 0.3 + 0.1j) == 0.3 + 0.1j
    assert abs(mobius_apply(DiskAutomorphism(np.pi, 0), 1) + 1) < 1e-15
    assert abs(mobius_apply(DiskAutomorphism(0, 0.5), 0.5)) < 1e-15
    inv = mobius_invert(DiskAutomorphism(0, 0))
    assert inv.theta == 0 and inv.a == 0
    m = DiskAutomorphism(0.4, 0.2 - 0.3j)
    assert abs(mobius_compose(m, mobius_invert(m))(0.7j) - 0.7j) < 1e-12
    assert abs(mobius_derivative(DiskAutomorphism(0, 0.5), 0) - 0.75) < 1e-15


def test_mobius_apply_rejects_outside_points():
    with pytest.raises(DomainError):
        mobius_apply(DiskAutomorphism(0, 0.1), 1.1)


def test_automorphism_rejects_boundary_parameter():
    with pytest.raises(ValueError):
        DiskAutomorphism(0, 1.0)


@settings(max_examples=60, deadline=None)
@given(automorphisms(), automorphisms(), automorphisms())
def test_composition_is_associative(m1, m2, m3):
    z = interior_disk()
    left = mobius_compose(mobius_compose(m1, m2), m3)
    right = mobius_compose(m1, mobius_compose(m2, m3))
    np.testing.assert_allclose(left(z), right(z), atol=1e-11)
    np.testing.assert_allclose(mobius_compose(m1, m2)(z), m1(m2(z)), atol=1e-11)


@settings(max_examples=60, deadline=None)
@given(automorphisms())
def test_inverse_and_boundary(m):
    z = interior_disk()
    np.testing.assert_allclose(mobius_compose(m, mobius_invert(m))(z), z, atol=1e-11)
    circle = np.exp(1j * np.linspace(0, 2 * np.pi, 100))
    np.testing.assert_allclose(np.abs(m(circle)), 1.0, atol=1e-12)
    assert np.all(np.abs(m(z)) < 1)


@settings(max_examples=40, deadline=None)
@given(automorphisms())
def test_derivative_against_difference(m):
    z = 0.3 - 0.2j
    h = 1e-6
    fd = (m(z + h) - m(z - h)) / (2 * h)
    assert abs(mobius_derivative(m, z) - fd) < 1e-8


def test_matrix_round_trip():
    m = DiskAutomorphism(1.3, 0.4 + 0.2j)
    p, q = m.matrix()
    assert abs(abs(p) ** 2 - abs(q) ** 2 - 1) < 1e-12
    back = DiskAutomorphism.from_matrix(p, q)
    z = interior_disk(5)
    np.testing.assert_allclose(back(z), m(z), atol=1e-13)


def test_conformal_map_of_mobius_inverts():
    m = ConformalMap.mobius(DiskAutomorphism(0.2, 0.5j))
    z = interior_disk(10)
    np.testing.assert_allclose(m.inverse().apply(m.apply(z)), z, atol=1e-12)


def test_domain_parse_aliases():
    assert CanonicalDomain.parse("upper_half_plane") is H
    assert CanonicalDomain.parse("disc") is D
    with pytest.raises(ValueError):
        CanonicalDomain.parse("annulus")
