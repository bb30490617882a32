import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow.autoflow import flow_in_domain
from slitflow.chain import ChainSpec, ConfigurationError
from slitflow.conformal import CanonicalDomain
from slitflow.driving import brownian_path, deterministic_path
from slitflow.fields import CompleteField, SlitField, preset_fields
from slitflow.transforms import (ElementaryTransform, TransformKind, apply, apply_all,
                                 equivalence_error, is_normalized, normalization_residuals,
                                 normalize, normalize_stochastic, printed_kappa_tilde,
                                 printed_mu_tilde, transform_coefficients, transform_driver)

H, D = CanonicalDomain.HalfPlane, CanonicalDomain.Disk
coef = st.floats(-2, 2)


def sine_spec(preset, domain=None, T=3.0):
    b, s = preset_fields(preset, domain)
    return ChainSpec(b, s, deterministic_path("sine", {"amplitude": 0.4}, 1e-3, T))


def test_parameter_constraints():
    with pytest.raises(ConfigurationError):
        ElementaryTransform("V", 0)
    with pytest.raises(ConfigurationError):
        ElementaryTransform("T", -1)
    with pytest.raises(ConfigurationError):
        ElementaryTransform("Q", 1)
    with pytest.raises(ConfigurationError):
        ElementaryTransform("D", float("nan"))
    tr = ElementaryTransform.parse(["s0", 0.3])
    assert tr.kind is TransformKind.S0
    assert ElementaryTransform.parse(tr.to_json()) == tr
    assert ElementaryTransform.parse({"kind": "R", "c": 2}).c == 2.0


def test_table_examples():
    b, _ = transform_coefficients(ElementaryTransform("R", 1), (2, 0, 0.5, 0), (1, 0, 0))
    assert b == (2, -6, 6.5, -2.5)
    b, _ = transform_coefficients(ElementaryTransform("S", math.log(2)), (2, 1, 1, 1), (1, 0, 0))
    np.testing.assert_allclose(b, (0.5, 0.5, 1, 2), rtol=1e-15)
    spec = sine_spec("abp")
    same = apply(["V", 1.0], spec)
    assert same.b == spec.b and same.sigma == spec.sigma and same.u == spec.u


def test_driver_rules():
    u = deterministic_path("sine", {"amplitude": 1.0}, 1e-3, 2.0)
    t = np.linspace(0, 0.4, 9)
    np.testing.assert_allclose(transform_driver(ElementaryTransform("V", 2.0), u)(t), u(t) / 2)
    np.testing.assert_allclose(transform_driver(ElementaryTransform("T", 3.0), u)(t), u(3 * t),
                               atol=1e-6)
    np.testing.assert_allclose(transform_driver(ElementaryTransform("D", 0.5), u)(t),
                               u(t) + 0.5 * t, atol=1e-12)
    c = 0.2
    np.testing.assert_allclose(transform_driver(ElementaryTransform("S0", c), u)(t),
                               math.exp(-c) * u(math.exp(2 * c) * t), atol=1e-6)
    for kind in ("R", "S"):
        assert transform_driver(ElementaryTransform(kind, 0.7), u) == u
    assert transform_driver(ElementaryTransform("T", 2.0), u).horizon == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["R", "S"]), st.floats(-1, 1), st.floats(0.2, 2), coef, coef, coef)
def test_conjugation_rules_are_pushforwards(kind, c, bm2, bm1, b0, b1):
    b = SlitField(bm2, bm1, b0, b1, domain=H)
    sigma = CompleteField(1.0, 0.3, -0.2, domain=H)
    nb, ns = transform_coefficients(ElementaryTransform(kind, c), b.coefficients, sigma.coefficients)
    gen = CompleteField(0, 0, 1, H) if kind == "R" else CompleteField(0, 1, 0, H)
    m = flow_in_domain(gen, c)
    m_inv = flow_in_domain(gen, -c)
    z = np.array([0.3 + 1j, -0.7 + 0.4j, 2j])
    h = 1e-6
    dm = (m(m_inv(z) + h) - m(m_inv(z) - h)) / (2 * h)
    for old, new in ((b, SlitField(*nb, domain=H)), (sigma, CompleteField(*ns, domain=H))):
        pushed = dm * old(m_inv(z))
        np.testing.assert_allclose(new(z), pushed, rtol=1e-6, atol=1e-6)


def test_normalize_examples():
    for preset in ("chordal", "radial"):
        spec = sine_spec(preset)
        rec = normalize(spec)
        assert rec.b.coefficients == spec.b.coefficients
        assert rec.sigma.coefficients == spec.sigma.coefficients
        assert all(tr.is_identity for tr in rec.transforms)
    u = deterministic_path("zero", dt=1e-2, T=1.0)
    spec = ChainSpec(SlitField(4, 0, 0, 0), CompleteField(2, 0, 0), u)
    rec = normalize(spec)
    assert [tr.kind.value for tr in rec.transforms] == ["V", "T", "D"]
    assert rec.transforms[0].c == 0.5 and rec.transforms[1].c == 0.5 and rec.transforms[2].c == 0
    assert rec.b.coefficients == (2, 0, 0, 0) and rec.sigma.coefficients == (1, 0, 0)


def random_triple(rng, T=3.0):
    b = SlitField(rng.uniform(0.5, 3), *rng.uniform(-1, 1, 3))
    s = CompleteField(rng.choice([-1, 1]) * rng.uniform(0.5, 2), *rng.uniform(-1, 1, 2))
    return ChainSpec(b, s, deterministic_path("sine", {"amplitude": 0.4}, 1e-3, T))


def test_normalize_and_idempotence():
    rng = np.random.default_rng(0)
    for _ in range(10):
        rec = normalize(random_triple(rng))
        assert max(abs(r) for r in rec.residuals) <= 1e-12
        again = normalize(rec.triple)
        assert all(abs(tr.c - (1.0 if tr.kind.value in "VT" else 0.0)) < 1e-12
                   for tr in again.transforms)


def test_normalize_rejects_degenerate_sigma():
    from slitflow.transforms import normalizing_transforms
    with pytest.raises(ConfigurationError):
        normalizing_transforms((2, 0, 0, 0), (0, 1, 0))


def test_s0_keeps_normalization():
    rng = np.random.default_rng(1)
    for _ in range(5):
        rec = normalize(random_triple(rng))
        c = rng.uniform(-1, 1)
        nb, ns = transform_coefficients(ElementaryTransform("S0", c), rec.b.coefficients,
                                        rec.sigma.coefficients)
        assert is_normalized(nb, ns, 1e-12), normalization_residuals(nb, ns)


def test_stochastic_examples():
    rec = normalize_stochastic(SlitField(4, 0, 0, 0), CompleteField(1, 0, 0), 3.0)
    assert rec.kappa == pytest.approx(1.5) and rec.mu == pytest.approx(0)
    b, s = preset_fields("radial")
    rec = normalize_stochastic(b, s, 2.7, 0.4)
    assert rec.kappa == pytest.approx(2.7) and rec.mu == pytest.approx(0.4)
    rec = normalize_stochastic(SlitField(2, 3, 0, 0), CompleteField(1, 0, 0), 1.0, mu=1.0)
    assert rec.mu == pytest.approx(-2.0)


@settings(max_examples=30, deadline=None)
@given(coef, coef, coef, coef, st.floats(0, 5), st.floats(-2, 2))
def test_printed_formulas_agree_in_normalized_scale(bm1, b0, s0, s1, kappa, mu):
    b, s = SlitField(2, bm1, b0, 0.1), CompleteField(1, s0, s1)
    rec = normalize_stochastic(b, s, kappa, mu)
    assert rec.mu == pytest.approx(printed_mu_tilde(b.coefficients, s.coefficients, mu), abs=1e-12)
    assert rec.kappa == pytest.approx(printed_kappa_tilde(b.coefficients, s.coefficients, kappa))


def test_kappa_formula_general():
    rng = np.random.default_rng(3)
    for _ in range(5):
        t = random_triple(rng)
        rec = normalize_stochastic(t.b, t.sigma, 2.0)
        assert rec.kappa == pytest.approx(
            printed_kappa_tilde(t.b.coefficients, t.sigma.coefficients, 2.0))


def test_stochastic_scaling_pathwise():
    # V then T applied to sqrt(kappa) B gives a path with the normalized quadratic variation
    b, s = SlitField(4, 0, 0, 0), CompleteField(2, 0, 0)
    kappa, dt = 3.0, 1e-4
    u = brownian_path(kappa, dt, 4.0, 0)
    out = apply_all(normalize(ChainSpec(b, s, u)).transforms, ChainSpec(b, s, u))
    rec = normalize_stochastic(b, s, kappa)
    # measure on the image of the original sample grid: interpolated midpoints carry no variation
    t_c = normalize(ChainSpec(b, s, u)).transforms[1].c
    grid = np.arange(0.0, out.u.horizon, dt / t_c)
    qv = np.sum(np.diff(out.u(grid)) ** 2) / grid[-1]
    assert qv == pytest.approx(rec.kappa, rel=0.05)


POINTS = 0.5 * np.exp(1j * np.linspace(0.3, 2 * np.pi - 0.3, 30))


@pytest.mark.parametrize("preset,domain", [("abp", D), ("chordal", H), ("radial", D)])
@pytest.mark.parametrize("kind,c", [("V", 1.7), ("T", 1.5), ("D", 0.6), ("R", 0.4), ("S", 0.5),
                                    ("S0", 0.3)])
def test_chain_identities(preset, domain, kind, c):
    spec = sine_spec(preset, domain)
    from slitflow.conformal import to_disk
    pts = to_disk(domain).inverse().apply(POINTS)
    assert equivalence_error(ElementaryTransform(kind, c), spec, pts, 0.8) < 1e-5
