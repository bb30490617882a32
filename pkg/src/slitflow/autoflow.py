"""Closed-form flows of complete fields and the boundary transit time.

A complete field with disk form ``alpha - i beta z - conj(alpha) z^2`` is the
infinitesimal generator of the one-parameter Möbius group
``exp(t X)`` with ``X = [[-i beta/2, alpha], [conj(alpha), i beta/2]]``.
Since ``X^2 = (D/4) I`` with ``D = 4|alpha|^2 - beta^2`` the exponential is
``cosh(t w) I + sinh(t w)/w X`` where ``w = sqrt(D)/2``; both scalar factors
are real for real ``t``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .conformal import CanonicalDomain, DiskAutomorphism, canonical_iso
from .fields import CompleteField

log = logging.getLogger(__name__)

PARABOLIC_TOL = 1e-10


class FixedPointError(ValueError):
    """The target boundary point is a zero of the field and cannot be reached."""


class FlowKind(enum.Enum):
    Elliptic = "elliptic"
    Hyperbolic = "hyperbolic"
    Parabolic = "parabolic"


@dataclass(frozen=True)
class FlowClass:
    kind: FlowKind
    discriminant: float


def _generator(sigma: CompleteField):
    alpha, beta = sigma.alpha_beta()
    return alpha, beta, 4.0 * abs(alpha) ** 2 - beta ** 2


def flow_class(sigma: CompleteField, tol: float = PARABOLIC_TOL) -> FlowClass:
    _, _, disc = _generator(sigma)
    if disc < -tol:
        kind = FlowKind.Elliptic
    elif disc > tol:
        kind = FlowKind.Hyperbolic
    else:
        kind = FlowKind.Parabolic
    return FlowClass(kind, disc)


def _scalar_factors(disc, t):
    """``(cosh(t w), sinh(t w)/w)`` with ``w^2 = disc/4``, vectorized in ``t``."""
    t = np.asarray(t, dtype=float)
    if disc > PARABOLIC_TOL:
        w = 0.5 * np.sqrt(disc)
        return np.cosh(t * w), np.sinh(t * w) / w
    if disc < -PARABOLIC_TOL:
        w = 0.5 * np.sqrt(-disc)
        return np.cos(t * w), np.sin(t * w) / w
    x = 0.25 * disc * t * t
    return 1.0 + 0.5 * x + x * x / 24.0, t * (1.0 + x / 6.0 + x * x / 120.0)


def flow_matrix(sigma: CompleteField, t):
    """SU(1,1) entries ``(p, q)`` of ``h_t`` so that ``h_t(z) = (p z + q)/(conj(q) z + conj(p))``.

    ``t`` may be an array; ``p`` and ``q`` then have its shape.
    """
    alpha, beta, disc = _generator(sigma)
    c, s = _scalar_factors(disc, t)
    return c - 0.5j * beta * s, alpha * s


def flow_at(sigma: CompleteField, t: float) -> DiskAutomorphism:
    """Time-``t`` map of the flow of ``sigma`` (disk coordinates)."""
    p, q = flow_matrix(sigma, float(t))
    return DiskAutomorphism.from_matrix(p, q)


def inverse_flow_at(sigma: CompleteField, t: float) -> DiskAutomorphism:
    return flow_at(sigma, -float(t))


def flow_in_domain(sigma: CompleteField, t: float):
    """``h_t`` as a callable in the field's own domain (conjugated through the disk)."""
    m = flow_at(sigma, t)
    if sigma.domain is CanonicalDomain.Disk:
        return m
    to_d = canonical_iso(sigma.domain, CanonicalDomain.Disk)
    back = to_d.inverse()
    return lambda z: back.apply(m(to_d.apply(z)))


@dataclass(frozen=True)
class TransitTime:
    value: float
    period: float | None = None


def _printed_transit(alpha, beta, disc, theta):
    """The piecewise closed expression for the transit time, used only as a cross-check."""
    e = np.exp(-1j * theta)
    k = 2 * alpha - 1j * beta
    num = (np.sqrt(abs(disc)) * ((1 - e) * k).real)
    den = abs(k) ** 2 - (e * k * k).real
    if disc > PARABOLIC_TOL:
        return -(2 / np.sqrt(disc)) * np.arctanh(num / den)
    if disc < -PARABOLIC_TOL:
        return -(2 / np.sqrt(-disc)) * np.arctan(num / den)
    tau = np.tan(theta / 2)
    if beta >= 0:
        return tau / (abs(alpha) - alpha.imag + alpha.real * tau)
    return tau / (abs(alpha) + alpha.imag - alpha.real * tau)


def t_sigma(sigma: CompleteField, theta: float, check_printed: bool = True) -> TransitTime:
    """Time ``T`` with ``h_T(1) = exp(i theta)`` for the flow of ``sigma``.

    Writing ``h_T(1) = exp(i theta)`` with the matrix exponential gives
    ``r(T) = sin(theta/2) / Im(exp(-i theta/2) (alpha - i beta/2))`` where
    ``r(T) = sinh(T w)/(w cosh(T w))`` is inverted in closed form.  For an
    elliptic flow the principal value lies in ``(-P/2, P/2]`` and ``P`` is
    returned as ``period``.
    """
    theta = float(theta)
    target = np.exp(1j * theta)
    if abs(target - 1.0) < 1e-15:
        return TransitTime(0.0, _period(sigma))
    alpha, beta, disc = _generator(sigma)
    sig_disk = sigma.on(CanonicalDomain.Disk)
    if abs(sig_disk(target)) <= 1e-12:
        raise FixedPointError(f"exp(i*{theta}) is a zero of the field; no transit time exists")
    if abs(sig_disk(1.0)) <= 1e-12:
        raise FixedPointError("1 is a zero of the field; its orbit is a single point")
    num = np.sin(theta / 2.0)
    den = (np.exp(-0.5j * theta) * (alpha - 0.5j * beta)).imag
    kind = flow_class(sigma).kind
    period = None
    if kind is FlowKind.Elliptic:
        w = 0.5 * np.sqrt(-disc)
        period = 2.0 * np.pi / np.sqrt(-disc)
        value = np.arctan2(w * num, den) / w
        value = (value + 0.5 * period) % period - 0.5 * period
        if np.isclose(value, -0.5 * period):
            value += period
    elif kind is FlowKind.Hyperbolic:
        w = 0.5 * np.sqrt(disc)
        x = w * num / den if den != 0 else np.inf
        if not abs(x) < 1.0:
            raise FixedPointError(
                f"exp(i*{theta}) lies beyond the boundary fixed points of a hyperbolic flow")
        value = np.arctanh(x) / w
    else:
        if den == 0:
            raise FixedPointError(f"exp(i*{theta}) is not reached by the parabolic flow")
        value = num / den
    value = float(value)
    if check_printed:
        _compare_printed(alpha, beta, disc, theta, value, period)
    return TransitTime(value, period)


def _period(sigma):
    fc = flow_class(sigma)
    if fc.kind is FlowKind.Elliptic:
        return 2.0 * np.pi / np.sqrt(-fc.discriminant)
    return None


def _compare_printed(alpha, beta, disc, theta, value, period):
    with np.errstate(all="ignore"):
        other = float(_printed_transit(alpha, beta, disc, theta))
    gap = abs(other - value)
    if period is not None and np.isfinite(gap):
        gap = abs((other - value + 0.5 * period) % period - 0.5 * period)
    if not gap <= 1e-6:
        log.warning("transit time: closed expression gives %.12g, flow inversion gives %.12g "
                    "(theta=%.6g)", other, value, theta)
