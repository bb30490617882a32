"""Reparameterizing a chain's hull evolution with other fields.

:func:`to_radial` rewrites the hulls of a disk chain as a radial chain fixing
the origin.  :func:`cross_reparam` does the same for an arbitrary target pair
by integrating the automorphism ``M_t = e^{i Theta}(z - A)/(1 - conj(A) z)``
that links the two chains.  :func:`kappa_estimate` and :func:`phase_probe`
are diagnostics for Brownian-driven chains.

Chains on the half-plane or the strip are handled through their disk
conjugates, so "the origin" there means the preimage of ``0`` under the
fixed isomorphism onto the disk.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .autoflow import FixedPointError, flow_at, flow_matrix, t_sigma
from .chain import (ChainSpec, ConfigurationError, DiskField, ExplosionError, Trace, _check_horizon,
                    _driver_breaks, _herglotz, evolve, sample_times)
from .conformal import CanonicalDomain, DiskAutomorphism
from .driving import DrivingPath
from .fields import CompleteField, SlitField, mobius_transform_slit, preset_fields
from .integrate import SolverOptions, solve

log = logging.getLogger(__name__)

DISK = CanonicalDomain.Disk


class HullError(ExplosionError):
    """The hull reached the fixed interior point before the requested time."""


def _disk_spec(spec: ChainSpec) -> ChainSpec:
    if spec.domain is DISK:
        return spec
    return ChainSpec(spec.b.on(DISK), spec.sigma.on(DISK), spec.u, DISK)


def radial_fields() -> tuple:
    return preset_fields("radial", DISK)


# --------------------------------------------------------------------------
# reduction to a radial chain


@dataclass
class RadialReduction:
    times: np.ndarray           # original chain times
    lam: np.ndarray             # lambda(t), integrated from the boundary-derivative formula
    lam_dot: np.ndarray
    lam_closed_form: np.ndarray  # log(|g_t'(0)| / (1 - |g_t(0)|^2))
    u_tilde: np.ndarray         # radial driver at lambda(t)
    T_max: float                # time the origin is swallowed (inf if not before T)
    truncated: bool
    g0: np.ndarray              # g_t(0) in the disk
    dg0: np.ndarray             # g_t'(0) in the disk

    @property
    def driver(self) -> DrivingPath:
        return DrivingPath(self.lam, self.u_tilde)

    @property
    def lambda_discrepancy(self) -> float:
        return float(np.max(np.abs(self.lam - self.lam_closed_form)))

    def M(self, i: int) -> DiskAutomorphism:
        """``M_{t_i}(z) = (|g'(0)|/g'(0)) (z - g(0))/(1 - conj(g(0)) z)``."""
        return DiskAutomorphism(-float(np.angle(self.dg0[i])), complex(self.g0[i]))

    def radial_spec(self) -> ChainSpec:
        b, s = radial_fields()
        return ChainSpec(b, s, self.driver, DISK)


def _boundary_ratio(sigma: CompleteField, u, g0, dg0):
    """``F(1)`` and ``F'(1)/F(1)`` for ``F = M o h_u^{-1}``, vectorized."""
    p, q = flow_matrix(sigma, -np.asarray(u, dtype=float))
    den = np.conj(q) + np.conj(p)
    w = (p + q) / den
    dw = 1.0 / (den * den)
    rot = np.abs(dg0) / dg0
    denom = 1.0 - np.conj(g0) * w
    F = rot * (w - g0) / denom
    dF = rot * (1.0 - np.abs(g0) ** 2) / (denom * denom) * dw
    return F, dF / F


def to_radial(spec: ChainSpec, T: float, *, horizon_fraction: float = 0.8, strict: bool = False,
              options: SolverOptions | None = None, times=None) -> RadialReduction:
    """Radial reparameterization ``(lambda, u~)`` of the chain's hulls up to ``T``.

    ``lambda`` is integrated together with ``g_t(0)`` and ``g_t'(0)`` from
    ``lambda' = (gamma/gamma~) (F'(1)/F(1))^2`` and compared against the
    closed form ``log(|g_t'(0)|/(1 - |g_t(0)|^2))``.  If the origin is
    swallowed before ``T`` the horizon is cut to ``horizon_fraction`` of the
    swallowing time, or :class:`HullError` is raised when ``strict``.
    """
    _check_horizon(spec.u, T)
    dspec = _disk_spec(spec)
    opt = options or SolverOptions()
    probe = evolve(dspec, [0j], T, opt)
    T_max = float(probe.explosion_times[0])
    truncated = False
    if not probe.alive[0]:
        if strict:
            raise HullError(f"the origin is swallowed at t = {T_max:.6g} < {T}")
        T = horizon_fraction * T_max
        truncated = True
        log.info("origin swallowed at %.6g; reduction stops at %.6g", T_max, T)
    if times is None:
        times = sample_times(dspec.u, T)
        if times[-1] < T:
            times = np.append(times, T)
    times = np.asarray(times, dtype=float)

    field_ = DiskField.of(dspec)
    sigma = dspec.sigma
    b_t, _ = radial_fields()
    weight = (dspec.b.b_m2 / 2.0) / (b_t.b_m2 / 2.0)

    def rhs(t, y):
        g, dg = y[:, 0], y[:, 1]
        v, dv = field_.with_derivative(t, g)
        _, ratio = _boundary_ratio(sigma, field_.u(t), g, dg)
        return np.stack([-v, -dv * dg, weight * np.abs(ratio) ** 2], axis=1)

    def step_limit(t, y):
        g = y[:, 0]
        dist = np.abs(g - field_.pole(t))
        speed = np.abs(field_(t, g))
        with np.errstate(divide="ignore", invalid="ignore"):
            cap = opt.step_cap * dist / speed
        return np.where(np.isnan(cap), opt.h_min, np.where(speed == 0, np.inf, cap))

    def is_dead(t, y):
        return np.abs(y[:, 0] - field_.pole(t)) < opt.eps_blowup

    sol = solve(rhs, 0.0, np.array([[0j, 1 + 0j, 0j]]), float(times[-1]), options=opt,
                breakpoints=_driver_breaks(dspec.u, 0.0, float(times[-1])), save_at=times,
                step_limit=step_limit, is_dead=is_dead)
    if not sol.alive[0]:
        raise HullError(f"the origin was lost at t = {sol.death_time[0]:.6g}")
    saved = sol.saved[0]
    g0, dg0, lam = saved[:, 0], saved[:, 1], saved[:, 2].real
    F1, ratio = _boundary_ratio(sigma, dspec.u(times), g0, dg0)
    lam_dot = weight * np.abs(ratio) ** 2
    u_tilde = np.unwrap(np.angle(F1))
    u_tilde -= u_tilde[0]
    closed = np.log(np.abs(dg0) / (1.0 - np.abs(g0) ** 2))
    return RadialReduction(times, lam, lam_dot, closed, u_tilde,
                           T_max if not probe.alive[0] else np.inf, truncated, g0, dg0)


# --------------------------------------------------------------------------
# reparameterization between two arbitrary field pairs


@dataclass
class CrossReparamState:
    times: np.ndarray
    A: np.ndarray
    Theta: np.ndarray
    lam: np.ndarray
    u_tilde: np.ndarray
    lam_dot: np.ndarray
    horizon_reached: bool      # |A| exceeded the local-existence bound before T_hint
    stopped_at: float

    @property
    def driver(self) -> DrivingPath:
        return DrivingPath(self.lam, self.u_tilde)


class _CrossRates:
    """Right-hand side of the ``(A, Theta, lambda)`` system with a tracked transit branch."""

    def __init__(self, spec: ChainSpec, b_target: SlitField, sigma_target: CompleteField):
        self.u = spec.u
        self.sigma = spec.sigma.on(DISK)
        self.form = _herglotz(spec.b.on(DISK))
        self.sigma_t = sigma_target.on(DISK)
        self.form_t = _herglotz(b_target.on(DISK))
        self.ref = 0.0

    def transit(self, pole: complex) -> float:
        """``u~ = -T^{sigma~}(pole)`` on the branch closest to the reference value."""
        tt = t_sigma(self.sigma_t, float(np.angle(pole)), check_printed=False)
        val = -tt.value
        if tt.period is not None:
            val += tt.period * np.round((self.ref - val) / tt.period)
        return val

    def rates(self, t: float, A: complex, theta: float):
        """``(A', Theta', lambda', u~)`` at one state."""
        if not abs(A) < 1.0:
            raise FloatingPointError("|A| left the disk")
        F = DiskAutomorphism(theta, A).compose(flow_at(self.sigma, -float(self.u(t))))
        first = mobius_transform_slit(self.form, F)
        ut = self.transit(first.z0)
        second = mobius_transform_slit(self.form_t, flow_at(self.sigma_t, -ut))
        lam_dot = first.gamma / second.gamma
        a2 = first.alpha - lam_dot * second.alpha
        b2 = first.beta - lam_dot * second.beta
        rot = np.exp(-1j * theta)
        dA = -rot * (1.0 - abs(A) ** 2) * a2
        dTheta = -b2 - 2.0 * (rot * np.conj(A) * a2).imag
        return dA, dTheta, lam_dot, ut

    def __call__(self, t, y):
        out = np.empty_like(y)
        for k in range(y.shape[0]):
            try:
                dA, dTh, ld, _ = self.rates(float(t[k]), complex(y[k, 0]), float(y[k, 1].real))
                out[k] = (dA, dTh, ld)
            except (FloatingPointError, FixedPointError, ValueError):
                out[k] = np.nan
        return out


def cross_reparam(spec: ChainSpec, b_target: SlitField, sigma_target: CompleteField,
                  T_hint: float, *, options: SolverOptions | None = None, times=None,
                  a_bound: float = 0.999) -> CrossReparamState:
    """Time change ``lambda`` and driver ``u~`` reproducing the hulls with the target fields.

    Integrates ``A' = -e^{-i Theta}(1 - |A|^2) a**``,
    ``Theta' = -b** - 2 Im(e^{-i Theta} conj(A) a**)`` from ``A = Theta = 0``,
    where ``a** - i b** z - conj(a**) z^2`` is the complete field
    ``F_* b - lambda' G_* b~`` with ``F = M_t o h_{u_t}^{-1}`` and
    ``G = h~_{u~}^{-1}``.  Integration stops early (not an error) when
    ``|A|`` exceeds ``a_bound``.
    """
    _check_horizon(spec.u, T_hint)
    if spec.domain is not DISK:
        spec = _disk_spec(spec)
    rates = _CrossRates(spec, b_target, sigma_target)
    opt = options or SolverOptions(rtol=1e-9, atol=1e-11)
    if times is None:
        times = sample_times(spec.u, T_hint)
        if times[-1] < T_hint:
            times = np.append(times, T_hint)
    times = np.asarray(times, dtype=float)

    def after_step(rows, t, y):
        try:
            rates.ref = rates.rates(float(t[0]), complex(y[0, 0]), float(y[0, 1].real))[3]
        except (FloatingPointError, FixedPointError, ValueError):
            pass

    def is_dead(t, y):
        return np.abs(y[:, 0]) > a_bound

    sol = solve(rates, 0.0, np.zeros((1, 3), dtype=complex), float(times[-1]), options=opt,
                breakpoints=_driver_breaks(spec.u, 0.0, float(times[-1])), save_at=times,
                is_dead=is_dead, after_step=after_step)
    saved = sol.saved[0]
    ok = np.all(np.isfinite(saved), axis=1)
    n = int(np.argmin(ok)) if not ok.all() else ok.size
    saved = saved[:n]
    kept = times[:n]
    A, Th, lam = saved[:, 0], saved[:, 1].real, saved[:, 2].real
    rates.ref = 0.0
    ut = np.empty(n)
    ld = np.empty(n)
    for i in range(n):
        _, _, ld[i], ut[i] = rates.rates(float(kept[i]), complex(A[i]), float(Th[i]))
        rates.ref = ut[i]
    stopped = float(sol.t[0]) if not sol.alive[0] else float(times[-1])
    return CrossReparamState(kept, A, Th, lam, ut, ld, not sol.alive[0], stopped)


# --------------------------------------------------------------------------
# diagnostics


def kappa_estimate(reduction: RadialReduction) -> float:
    """Realized quadratic variation of the radial driver per unit radial time."""
    lam_T = float(reduction.lam[-1])
    dt = float(np.median(np.diff(reduction.times)))
    if not lam_T >= 10 * dt:
        raise ConfigurationError("radial horizon too short for a quadratic-variation estimate")
    return float(np.sum(np.diff(reduction.u_tilde) ** 2) / lam_T)


@dataclass
class PhaseReport:
    simple: bool
    min_gap: float              # smallest distance between samples more than `window` apart
    resolution: float           # median distance between consecutive samples
    gap_ratio: float            # min over far pairs of distance / local step length
    box_dim_estimate: float
    n_samples: int


def _far_pairs(pts, window: int):
    """Sample pairs more than ``window`` apart whose distance is within a few steps."""
    from scipy.spatial import cKDTree

    xy = np.column_stack([pts.real, pts.imag])
    tree = cKDTree(xy)
    steps = np.abs(np.diff(pts))
    r = 4.0 * float(steps.max())
    pairs = tree.query_pairs(r, output_type="ndarray")
    if pairs.size:
        pairs = pairs[np.abs(pairs[:, 0] - pairs[:, 1]) > window]
    while pairs.size == 0:
        r *= 2.0
        pairs = tree.query_pairs(r, output_type="ndarray")
        if pairs.size:
            pairs = pairs[np.abs(pairs[:, 0] - pairs[:, 1]) > window]
        if r > 4 * float(np.ptp(xy, axis=0).max()) + 1e-300:
            break
    if pairs.size == 0:
        return pairs.reshape(0, 2), np.empty(0)
    return pairs, np.abs(pts[pairs[:, 0]] - pts[pairs[:, 1]])


def _densify(pts, spacing: float):
    segs = np.diff(pts)
    n = np.maximum(1, np.ceil(np.abs(segs) / spacing).astype(int))
    out = [pts[:1]]
    for p, s, m in zip(pts[:-1], segs, n):
        out.append(p + s * (np.arange(1, m + 1) / m))
    return np.concatenate(out)


def box_dimension(pts, n_scales: int = 3, finest=None) -> float:
    """Least-squares slope of ``log N(s)`` against ``log(1/s)`` over dyadic ``s``.

    The polyline through ``pts`` is densified well below the finest box so
    that boxes crossed between samples are counted.
    """
    pts = np.asarray(pts, dtype=complex)
    pts = pts[np.isfinite(pts)]
    diam = float(max(np.ptp(pts.real), np.ptp(pts.imag)))
    if finest is None:
        finest = diam / 2 ** (n_scales + 2)
    scales = finest * 2.0 ** np.arange(n_scales)[::-1]
    dense = _densify(pts, finest / 8)
    xy = np.column_stack([dense.real, dense.imag])
    base = xy.min(axis=0)
    counts = []
    for s in scales:
        # average over a few grid offsets to damp alignment effects
        c = []
        for off in (0.0, 0.37, 0.71):
            ij = np.floor((xy - base) / s + off)
            c.append(len(np.unique(ij.astype(np.int64), axis=0)))
        counts.append(np.mean(c))
    slope = np.polyfit(np.log(1.0 / scales), np.log(counts), 1)[0]
    return float(slope)


def phase_probe(tr: Trace, window: int = 5, touch_factor: float = 0.18,
                n_scales: int = 3) -> PhaseReport:
    """Self-approach and box-counting diagnostics of a sampled trace.

    For samples ``i, j`` more than ``window`` indices apart the distance is
    divided by the longest step adjacent to either sample, the local
    sampling resolution.  The trace counts as simple when the smallest such
    ratio is at least ``touch_factor``.  A trace with double points has
    ratios that go to zero under refinement, while a simple one keeps them
    bounded below; the default factor was calibrated on Brownian drivers
    at ``kappa = 2`` and ``kappa = 6``.
    """
    pts = np.asarray(tr.tips)[np.asarray(tr.ok, dtype=bool)]
    if pts.size < 500:
        raise ConfigurationError("phase probe needs at least 500 trace samples")
    steps = np.abs(np.diff(pts))
    resolution = float(np.median(steps))
    local = np.maximum(np.r_[steps, 0.0], np.r_[0.0, steps])
    pairs, dist = _far_pairs(pts, window)
    if dist.size:
        gap = float(dist.min())
        ratio = float(np.min(dist / np.maximum(local[pairs[:, 0]], local[pairs[:, 1]])))
    else:
        gap = ratio = np.inf
    finest = max(4 * resolution, float(max(np.ptp(pts.real), np.ptp(pts.imag))) / 2 ** (n_scales + 3))
    dim = box_dimension(pts, n_scales, finest)
    return PhaseReport(bool(ratio >= touch_factor), gap, resolution, ratio, dim, int(pts.size))
