"""Elementary transformations of triples ``(b, sigma, u)`` and normalization.

The six transformations act on coefficients by fixed polynomial rules that
hold in every canonical domain (pushforward is linear and the rules come from
the half-plane forms of ``ell_n``).  Each one relates the transformed chain to
the original by a known identity; :func:`equivalence_error` measures that
identity numerically.

Normalization reaches ``b_m2 = 2``, ``sigma_m1 = 1`` and
``-2 b_m1/b_m2 + 3 sigma_0/sigma_m1 = 0`` by ``V``, then ``T``, then ``D``,
each parameter being computed from the coefficients produced by the previous
step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .autoflow import flow_in_domain
from .chain import ChainSpec, ConfigurationError, evolve
from .driving import DrivingPath
from .fields import CompleteField, SlitField

ChainTriple = ChainSpec

NORMALIZATION_TOL = 1e-12


class TransformKind(enum.Enum):
    V = "V"    # driver scaling
    T = "T"    # time scaling
    D = "D"    # drift
    R = "R"    # parabolic rotation (flow of ell_1)
    S = "S"    # scaling (flow of ell_0)
    S0 = "S0"  # V_{e^c} T_{e^{2c}} S_c


@dataclass(frozen=True)
class ElementaryTransform:
    kind: TransformKind
    c: float

    def __post_init__(self):
        kind = self.kind
        if not isinstance(kind, TransformKind):
            try:
                kind = TransformKind(str(kind).upper().replace("⁰", "0"))
            except ValueError:
                raise ConfigurationError(f"unknown transform kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        c = float(self.c)
        object.__setattr__(self, "c", c)
        if not math.isfinite(c):
            raise ConfigurationError("transform parameter must be finite")
        if kind is TransformKind.V and c == 0.0:
            raise ConfigurationError("V_c needs c != 0")
        if kind is TransformKind.T and not c > 0.0:
            raise ConfigurationError("T_c needs c > 0")

    @classmethod
    def parse(cls, item) -> "ElementaryTransform":
        """Accepts ``["S", 0.69]``, ``{"kind": "S", "c": 0.69}`` or an instance."""
        if isinstance(item, ElementaryTransform):
            return item
        if isinstance(item, dict):
            return cls(item["kind"], item["c"])
        kind, c = item
        return cls(kind, c)

    def to_json(self) -> list:
        return [self.kind.value, self.c]

    @property
    def is_identity(self) -> bool:
        if self.kind in (TransformKind.V, TransformKind.T):
            return self.c == 1.0
        return self.c == 0.0


# --------------------------------------------------------------------------
# coefficient rules


def transform_coefficients(tr: ElementaryTransform, b, sigma) -> tuple:
    """New ``(b_m2, b_m1, b_0, b_1)`` and ``(sigma_m1, sigma_0, sigma_1)``."""
    bm2, bm1, b0, b1 = (float(x) for x in b)
    sm1, s0, s1 = (float(x) for x in sigma)
    c = tr.c
    k = tr.kind
    if k is TransformKind.V:
        return (bm2, bm1, b0, b1), (c * sm1, c * s0, c * s1)
    if k is TransformKind.T:
        return (c * bm2, c * bm1, c * b0, c * b1), (sm1, s0, s1)
    if k is TransformKind.D:
        return (bm2, bm1 + c * sm1, b0 + c * s0, b1 + c * s1), (sm1, s0, s1)
    if k is TransformKind.R:
        nb = (bm2,
              bm1 - 3 * c * bm2,
              b0 - 2 * c * bm1 + 3 * c * c * bm2,
              b1 - c * b0 + c * c * bm1 - c ** 3 * bm2)
        ns = (sm1, s0 - 2 * c * sm1, s1 - c * s0 + c * c * sm1)
        return nb, ns
    e = math.exp(c)
    if k is TransformKind.S:
        return (bm2 / (e * e), bm1 / e, b0, e * b1), (sm1 / e, s0, e * s1)
    # S0: factor e^{2c} on b and e^{c} on sigma on top of S_c
    return (bm2, e * bm1, e * e * b0, e ** 3 * b1), (sm1, e * s0, e * e * s1)


def _time_changed(u: DrivingPath, rate: float, scale: float = 1.0) -> DrivingPath:
    """``t -> scale * u(rate t)`` on ``[0, horizon/rate]``, keeping the original step."""
    horizon = u.horizon / rate
    dt = u.dt
    n = max(1, int(math.floor(horizon / dt + 1e-9)))
    t = np.arange(n + 1) * dt
    if horizon - t[-1] > 1e-9 * dt:
        t = np.append(t, horizon)
    else:
        t[-1] = horizon
    return DrivingPath(t, scale * u(np.minimum(rate * t, u.horizon)))


def transform_driver(tr: ElementaryTransform, u: DrivingPath) -> DrivingPath:
    k, c = tr.kind, tr.c
    if k is TransformKind.V:
        return DrivingPath(u.times, u.values / c)
    if k is TransformKind.T:
        return u if c == 1.0 else _time_changed(u, c)
    if k is TransformKind.D:
        return DrivingPath(u.times, u.values + c * u.times)
    if k is TransformKind.S0:
        return u if c == 0.0 else _time_changed(u, math.exp(2 * c), math.exp(-c))
    return u


def apply(tr, triple: ChainTriple) -> ChainTriple:
    """Transformed triple; fields keep the triple's domain."""
    tr = ElementaryTransform.parse(tr)
    nb, ns = transform_coefficients(tr, triple.b.coefficients, triple.sigma.coefficients)
    if ns[0] == 0.0:
        raise ConfigurationError("transform produced sigma_m1 = 0")
    b = SlitField(*nb, domain=triple.domain, allow_complete=triple.b.allow_complete)
    sigma = CompleteField(*ns, domain=triple.domain)
    return ChainSpec(b, sigma, transform_driver(tr, triple.u), triple.domain)


def apply_all(transforms, triple: ChainTriple) -> ChainTriple:
    for tr in transforms:
        triple = apply(tr, triple)
    return triple


# --------------------------------------------------------------------------
# normalization


def normalization_residuals(b, sigma) -> tuple:
    """``(b_m2 - 2, sigma_m1 - 1, -2 b_m1/b_m2 + 3 sigma_0/sigma_m1)``."""
    bm2, bm1 = b[0], b[1]
    sm1, s0 = sigma[0], sigma[1]
    return bm2 - 2.0, sm1 - 1.0, -2.0 * bm1 / bm2 + 3.0 * s0 / sm1


def is_normalized(b, sigma, tol: float = NORMALIZATION_TOL) -> bool:
    return all(abs(r) <= tol for r in normalization_residuals(b, sigma))


def drift_parameter(b, sigma) -> float:
    """``(1.5 b_m2 sigma_0 - b_m1) / sigma_m1`` for the given coefficients."""
    return (1.5 * b[0] * sigma[1] - b[1]) / sigma[0]


def normalizing_transforms(b, sigma) -> list:
    """``[V, T, D]`` whose successive application normalizes ``(b, sigma)``."""
    b = tuple(float(x) for x in b)
    sigma = tuple(float(x) for x in sigma)
    if sigma[0] == 0.0:
        raise ConfigurationError("normalization needs sigma_m1 != 0")
    if not b[0] > 0.0:
        raise ConfigurationError("normalization needs b_m2 > 0")
    out = []
    v = ElementaryTransform(TransformKind.V, 1.0 / sigma[0])
    b, sigma = transform_coefficients(v, b, sigma)
    tt = ElementaryTransform(TransformKind.T, 2.0 / b[0])
    b, sigma = transform_coefficients(tt, b, sigma)
    d = ElementaryTransform(TransformKind.D, drift_parameter(b, sigma))
    out.extend([v, tt, d])
    return out


@dataclass
class NormalizationRecord:
    transforms: list
    b: SlitField
    sigma: CompleteField
    u: DrivingPath | None = None
    kappa: float | None = None
    mu: float | None = None
    residuals: tuple = field(default=())

    @property
    def triple(self) -> ChainTriple:
        if self.u is None:
            raise ConfigurationError("no driving path in this record")
        return ChainSpec(self.b, self.sigma, self.u, self.b.domain)


def normalize(triple: ChainTriple) -> NormalizationRecord:
    transforms = normalizing_transforms(triple.b.coefficients, triple.sigma.coefficients)
    out = apply_all(transforms, triple)
    res = normalization_residuals(out.b.coefficients, out.sigma.coefficients)
    return NormalizationRecord(transforms, out.b, out.sigma, out.u, residuals=res)


def normalize_stochastic(b: SlitField, sigma: CompleteField, kappa: float,
                         mu: float = 0.0) -> NormalizationRecord:
    """Normalize fields driven by ``sqrt(kappa) B_t + mu t``.

    ``V_c`` multiplies the driver by ``1/c``, ``T_c`` rescales time (Brownian
    scaling turns ``sqrt(kappa) B_{ct}`` into ``sqrt(c kappa) B'_t``) and
    ``D_c`` adds ``c t``; composing the three gives ``kappa`` and ``mu`` of
    the normalized driver.
    """
    if kappa < 0:
        raise ConfigurationError("kappa must be nonnegative")
    transforms = normalizing_transforms(b.coefficients, sigma.coefficients)
    nb, ns = b.coefficients, sigma.coefficients
    amp, drift = math.sqrt(kappa), float(mu)
    for tr in transforms:
        nb, ns = transform_coefficients(tr, nb, ns)
        if tr.kind is TransformKind.V:
            amp, drift = amp / tr.c, drift / tr.c
        elif tr.kind is TransformKind.T:
            amp, drift = amp * math.sqrt(tr.c), drift * tr.c
        elif tr.kind is TransformKind.D:
            drift += tr.c
    return NormalizationRecord(
        transforms,
        SlitField(*nb, domain=b.domain),
        CompleteField(*ns, domain=sigma.domain),
        kappa=amp * amp,
        mu=drift,
        residuals=normalization_residuals(nb, ns),
    )


def printed_mu_tilde(b, sigma, mu: float) -> float:
    """The closed-form drift ``2 sigma_m1 mu / b_m2 + (1.5 b_m2 sigma_0 - b_m1)/sigma_m1``.

    It agrees with :func:`normalize_stochastic` when ``b_m2 = 2`` and
    ``sigma_m1 = 1``; otherwise its second term is the drift parameter of the
    unnormalized coefficients rather than of the ``V, T``-transformed ones.
    """
    return 2.0 * sigma[0] * mu / b[0] + drift_parameter(b, sigma)


def printed_kappa_tilde(b, sigma, kappa: float) -> float:
    return kappa * 2.0 * sigma[0] ** 2 / b[0]


# --------------------------------------------------------------------------
# chain-level identities


def _conjugator(kind: TransformKind, c: float, domain):
    """``(r_c or s_c, its inverse)`` in ``domain`` from the flows of ``ell_1`` / ``ell_0``."""
    gen = CompleteField(0.0, 0.0, 1.0, domain) if kind is TransformKind.R \
        else CompleteField(0.0, 1.0, 0.0, domain)
    return flow_in_domain(gen, c), flow_in_domain(gen, -c)


def equivalence_error(tr, triple: ChainTriple, points, T: float, n_times: int = 8,
                      options=None) -> float:
    """Largest deviation from the chain identity of ``tr`` over sample times in ``(0, T]``.

    Identities: ``V: g~_t = g_t``; ``T: g~_t = g_{ct}``; ``D: g~_t = h_{-ct} o g_t``;
    ``R, S: g~_t = m o g_t o m^{-1}`` with ``m`` the flow of ``ell_1`` / ``ell_0``
    at time ``c``; ``S0: g~_t = s_c o g_{e^{2c} t} o s_c^{-1}``.  ``T`` is a time
    on the transformed chain; points dead on either side are skipped.
    """
    tr = ElementaryTransform.parse(tr)
    new = apply(tr, triple)
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    times = np.linspace(T / n_times, T, n_times)
    k, c = tr.kind, tr.c
    rate = {TransformKind.T: c, TransformKind.S0: math.exp(2 * c)}.get(k, 1.0)

    if k in (TransformKind.R, TransformKind.S, TransformKind.S0):
        m, m_inv = _conjugator(TransformKind.R if k is TransformKind.R else TransformKind.S,
                               c, triple.domain)
        start_old = np.asarray(m_inv(points), dtype=complex)
    else:
        m = None
        start_old = points

    lhs = evolve(new, points, T, options, save_at=times).history
    rhs = evolve(triple, start_old, rate * T, options, save_at=rate * times).history
    if k is TransformKind.D:
        for j, t in enumerate(times):
            ok = np.isfinite(rhs[:, j])
            rhs[ok, j] = flow_in_domain(triple.sigma, -c * t)(rhs[ok, j])
    elif m is not None:
        ok = np.isfinite(rhs)
        rhs[ok] = m(rhs[ok])
    both = np.isfinite(lhs) & np.isfinite(rhs)
    if not both.any():
        raise ConfigurationError("no point survives on both sides")
    return float(np.max(np.abs(lhs[both] - rhs[both])))
