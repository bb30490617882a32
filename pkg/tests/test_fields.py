import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow.autoflow import flow_at
from slitflow.conformal import CanonicalDomain, DiskAutomorphism, canonical_iso
from slitflow.fields import (CompleteDiskForm, CompleteField, HerglotzSlitForm, PoleError,
                             SlitField, complete_conversions, ell, herglotz_to_slit,
                             mobius_transform_slit, preset_fields, printed_beta_transform,
                             pushforward, semicomplete_check, slit_to_herglotz)

H, D, S = CanonicalDomain.HalfPlane, CanonicalDomain.Disk, CanonicalDomain.Strip
coef = st.floats(-3, 3)


def disk_points(n=100, seed=1, rmax=0.95):
    rng = np.random.default_rng(seed)
    return np.sqrt(rng.uniform(0, rmax ** 2, n)) * np.exp(2j * np.pi * rng.uniform(size=n))


def half_plane_ell(n):
    return lambda z: -(z ** (n + 1))


def test_ell_examples():
    assert ell(-2, H, 2) == -0.5
    assert abs(ell(-2, D, 0) + 1 / 8) < 1e-15
    z = disk_points(10)
    np.testing.assert_allclose(ell(-1, D, z), -0.25j * (z + 1) ** 2, atol=1e-15)


def test_ell_poles():
    with pytest.raises(PoleError):
        ell(-2, D, 1.0)
    with pytest.raises(PoleError):
        ell(-2, H, 0.0)
    with pytest.raises(ValueError):
        ell(3, D, 0.1)


@pytest.mark.parametrize("n", [-2, -1, 0, 1, 2])
def test_closed_forms_equal_pushforwards(n):
    w = disk_points()
    pushed = pushforward(half_plane_ell(n), canonical_iso(H, D))
    np.testing.assert_allclose(ell(n, D, w), pushed(w), atol=1e-10, rtol=0)
    zs = canonical_iso(D, S).apply(disk_points(seed=2, rmax=0.9))
    pushed_s = pushforward(half_plane_ell(n), canonical_iso(H, S))
    np.testing.assert_allclose(ell(n, S, zs), pushed_s(zs), atol=1e-10, rtol=0)


def test_pushforward_examples():
    w = disk_points(20)
    phi = canonical_iso(H, D)
    ident = canonical_iso(D, D)
    V = lambda z: z ** 2 + 1
    np.testing.assert_allclose(pushforward(V, ident)(w), V(w))
    const = pushforward(lambda z: -np.ones_like(z), phi)
    assert abs(const(np.array([1.0 + 0j]))[0] + 1j) < 1e-15


@pytest.mark.parametrize("u", [-1.0, 0.0, 2.0])
def test_frozen_chordal_field_in_disk(u):
    w = disk_points(50)
    pushed = pushforward(lambda z: -2 / (z - u), canonical_iso(H, D))
    expected = 0.5j * (w + 1) ** 3 / (w * (u + 2j) + u - 2j)
    np.testing.assert_allclose(pushed(w), expected, atol=1e-9)


def test_pushforward_is_linear():
    w = disk_points(30)
    phi = canonical_iso(H, S)
    v1, v2 = half_plane_ell(-1), half_plane_ell(1)
    z = canonical_iso(D, S).apply(w)
    lhs = pushforward(lambda x: 2.5 * v1(x) - 0.7 * v2(x), phi)(z)
    rhs = 2.5 * pushforward(v1, phi)(z) - 0.7 * pushforward(v2, phi)(z)
    np.testing.assert_allclose(lhs, rhs, atol=1e-11)


def test_preset_closed_forms():
    z = disk_points(200, rmax=0.9)
    b, s = preset_fields("radial", D)
    np.testing.assert_allclose(b(z), -z * (1 + z) / (1 - z), atol=1e-12)
    np.testing.assert_allclose(s(z), -1j * z, atol=1e-12)
    assert abs(b(0.2) + 0.3) < 1e-15
    assert abs(s(1j) - 1) < 1e-15
    b, s = preset_fields("abp", D)
    np.testing.assert_allclose(b(z), 0.25 * (z + 1) ** 3 / (z - 1), atol=1e-12)
    assert abs(b(0.0) + 0.25) < 1e-15
    zs = canonical_iso(D, S).apply(z)
    b, s = preset_fields("dipolar", S)
    np.testing.assert_allclose(b(zs), -1 / np.tanh(zs / 2), atol=1e-12)
    np.testing.assert_allclose(s(zs), -1, atol=1e-12)


def test_slit_field_requires_positive_leading_coefficient():
    with pytest.raises(ValueError):
        SlitField(0, 1, 0, 0)
    with pytest.raises(ValueError):
        SlitField(-1, 0, 0, 0)
    assert not SlitField.diagnostic(0, 1, 0, 0).has_pole


def test_herglotz_examples():
    radial = herglotz_to_slit(HerglotzSlitForm(0, 0, 1))
    assert radial.coefficients == (2, 0, 0.5, 0)
    h = slit_to_herglotz(SlitField(2, 0, 0, 0))
    assert (h.alpha, h.beta, h.gamma) == (-0.25, 0, 1)
    b = SlitField(2, 1, -0.5, 0.25)
    assert herglotz_to_slit(slit_to_herglotz(b)).coefficients == b.coefficients


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 3), coef, coef, coef)
def test_herglotz_form_evaluates_like_coefficients(bm2, bm1, b0, b1):
    b = SlitField(bm2, bm1, b0, b1)
    h = slit_to_herglotz(b)
    z = disk_points(40, rmax=0.9)
    np.testing.assert_allclose(h(z), b(z), atol=1e-11 * (1 + np.max(np.abs(b(z)))))
    back = herglotz_to_slit(h)
    np.testing.assert_allclose(back.coefficients, b.coefficients, atol=1e-12)


def test_herglotz_rejects_zero_weight_for_slit_output():
    with pytest.raises(ValueError):
        herglotz_to_slit(HerglotzSlitForm(0.1, 0.2, 0.0))


def test_complete_conversions():
    assert complete_conversions(CompleteField(1, 0, 0.25)) == CompleteDiskForm(0, 0, 1)
    assert complete_conversions(CompleteField(1, 0, 0)) == CompleteDiskForm(0, -0.25, 0.5)
    assert complete_conversions(CompleteDiskForm(0, 0, 0)).coefficients == (0, 0, 0)


@settings(max_examples=50, deadline=None)
@given(coef, coef, coef)
def test_complete_round_trip_and_disk_form(s1, s2, s3):
    f = CompleteField(s1, s2, s3)
    form = complete_conversions(f)
    np.testing.assert_allclose(complete_conversions(form).coefficients, f.coefficients, atol=1e-12)
    z = disk_points(20)
    np.testing.assert_allclose(form(z), f(z), atol=1e-12)
    alpha, beta = f.alpha_beta()
    np.testing.assert_allclose(alpha - 1j * beta * z - np.conj(alpha) * z ** 2, f(z), atol=1e-12)


def test_mobius_transform_identity_and_rotation():
    h = HerglotzSlitForm(0.2 - 0.1j, 0.3, 0.8)
    same = mobius_transform_slit(h, DiskAutomorphism.identity())
    assert abs(same.alpha - h.alpha) < 1e-15 and abs(same.beta - h.beta) < 1e-15
    rot = mobius_transform_slit(h, DiskAutomorphism(np.pi / 3, 0))
    assert abs(rot.gamma - h.gamma) < 1e-14


def test_mobius_transform_matches_pointwise_pushforward():
    h = HerglotzSlitForm(0.2 - 0.1j, 0.3, 0.8)
    m = DiskAutomorphism(0.7, 0.3)
    new = mobius_transform_slit(h, m)
    assert abs(new.alpha - np.exp(0.7j) / (1 - 0.09) * h(0.3)) < 1e-14
    z = disk_points(50, rmax=0.9)
    np.testing.assert_allclose(new(z), pushforward(h, m)(z), atol=1e-9)
    assert abs(new.beta - printed_beta_transform(h, m)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0, 0.8), st.floats(-np.pi, np.pi))
def test_mobius_transform_random(theta, r, arg):
    h = HerglotzSlitForm(-0.3 + 0.4j, -0.5, 1.2)
    m = DiskAutomorphism(theta, r * np.exp(1j * arg))
    new = mobius_transform_slit(h, m)
    z = disk_points(50, rmax=0.8)
    pushed = pushforward(h, m)(z)
    np.testing.assert_allclose(new(z), pushed, atol=1e-9 * (1 + np.max(np.abs(pushed))))
    assert abs(new.beta - printed_beta_transform(h, m)) < 1e-8 * (1 + abs(new.beta))


def test_semicomplete_examples():
    l_m2 = lambda z: ell(-2, D, z)
    rep = semicomplete_check(l_m2)
    assert rep.ok
    z = disk_points(10)
    q = (l_m2(0j) - l_m2(z)) / z - np.conj(l_m2(0j)) * z
    np.testing.assert_allclose(q, 0.5 * (1 + z) / (1 - z), atol=1e-12)
    neg = lambda z: -ell(2, D, z)
    assert semicomplete_check(neg).ok
    q2 = (neg(0j) - neg(z)) / z - np.conj(neg(0j)) * z
    np.testing.assert_allclose(q2, 8 * (1 - z) / (1 + z), atol=1e-12)
    assert not semicomplete_check(lambda z: ell(2, D, z)).ok


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 3), coef, coef, coef)
def test_semicomplete_cone(weight, s1, s2, s3):
    sigma = CompleteField(s1, s2, s3)
    V = lambda z: weight * ell(-2, D, z) + sigma(z)
    assert semicomplete_check(V).ok


def test_presets_are_slit_and_complete():
    for name in ("chordal", "radial", "dipolar", "abp", "radial-b-chordal-sigma"):
        b, s = preset_fields(name, D)
        assert semicomplete_check(b.as_function()).ok
        alpha, beta = s.alpha_beta()
        z = disk_points(20)
        np.testing.assert_allclose(s(z), alpha - 1j * beta * z - np.conj(alpha) * z ** 2, atol=1e-12)


@pytest.mark.parametrize("sigma", [CompleteField(1, 0, 0.25), CompleteField(1, 0.4, -0.3),
                                   CompleteField(1, 2, 0.1)])
def test_field_invariant_under_own_flow(sigma):
    z = disk_points(30, rmax=0.8)
    for s in (0.3, -1.2):
        np.testing.assert_allclose(pushforward(sigma, flow_at(sigma, s))(z), sigma(z), atol=1e-9)


def test_json_round_trip():
    b = SlitField(2, 1, 0, -1, domain=S)
    assert SlitField.from_json(b.to_json()) == b
    s = CompleteField(1, 0, 0.25, domain=H)
    assert CompleteField.from_json(s.to_json()) == s
