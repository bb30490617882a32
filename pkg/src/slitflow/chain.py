"""General slit Löwner chains: field assembly, forward evolution, traces.

The chain of a triple ``(b, sigma, u)`` solves ``d/dt g_t(z) = -V(t, g_t(z))``
with ``V(t, .) = (h_{u_t}^{-1})_* b``, where ``h_s`` is the flow of ``sigma``.
All computations run in the unit disk: a chain on the half-plane or the strip
is the conjugate of the disk chain with the same coefficients by the fixed
isomorphism, so points are mapped in, evolved, and mapped back.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .autoflow import flow_matrix
from .conformal import CanonicalDomain, to_disk
from .driving import DrivingPath
from .fields import CompleteField, HerglotzSlitForm, SlitField, slit_to_herglotz
from .integrate import SolverOptions, solve

DISK = CanonicalDomain.Disk


class ConfigurationError(ValueError):
    """Invalid chain specification or solver request."""


class ExplosionError(RuntimeError):
    """A point needed for the requested quantity left the domain too early."""


@dataclass(frozen=True)
class ChainSpec:
    b: SlitField
    sigma: CompleteField
    u: DrivingPath
    domain: CanonicalDomain | None = None

    def __post_init__(self):
        dom = self.b.domain if self.domain is None else CanonicalDomain.parse(self.domain)
        object.__setattr__(self, "domain", dom)
        if self.b.domain is not dom or self.sigma.domain is not dom:
            raise ConfigurationError("b and sigma must live on the chain's domain")
        if self.sigma.sigma_m1 == 0.0:
            raise ConfigurationError("sigma_m1 must be nonzero")

    def shifted(self, s: float) -> "ChainSpec":
        """Same fields driven by ``tau -> u_{s+tau} - u_s``.

        Its chain is ``h_{u_s} o g_{s, s+tau} o h_{u_s}^{-1}``; to continue the
        original chain from ``s`` use :func:`evolve` with ``t_start = s``.
        """
        return replace(self, u=self.u.shifted(s))

    def with_driver(self, u: DrivingPath) -> "ChainSpec":
        return replace(self, u=u)


class DiskField:
    """The time-dependent field ``V(t, z)`` of a chain, in disk coordinates."""

    def __init__(self, b: SlitField, sigma: CompleteField, u: DrivingPath):
        self.form: HerglotzSlitForm = _herglotz(b.on(DISK))
        self.sigma = sigma.on(DISK)
        self.u = u
        self.has_pole = b.b_m2 > 0

    @classmethod
    def of(cls, spec: ChainSpec) -> "DiskField":
        return cls(spec.b, spec.sigma, spec.u)

    def flow(self, t):
        return flow_matrix(self.sigma, self.u(t))

    def _b(self, w):
        f = self.form
        return f.alpha - w * (1j * f.beta + f.gamma * (1 + w) / (1 - w)) - np.conj(f.alpha) * w * w

    def _db(self, w):
        f = self.form
        return (-1j * f.beta - f.gamma * (1 + 2 * w - w * w) / (1 - w) ** 2
                - 2 * np.conj(f.alpha) * w)

    def __call__(self, t, z):
        p, q = self.flow(t)
        den = np.conj(q) * z + np.conj(p)
        w = (p * z + q) / den
        return self._b(w) * den * den

    def with_derivative(self, t, z):
        p, q = self.flow(t)
        qb = np.conj(q)
        den = qb * z + np.conj(p)
        w = (p * z + q) / den
        bw = self._b(w)
        return bw * den * den, self._db(w) + 2 * qb * bw * den

    def pole(self, t):
        """Preimage ``h_{u_t}^{-1}(1)`` of the marked point."""
        p, q = self.flow(t)
        return (np.conj(p) - q) / (p - np.conj(q))


def _herglotz(b: SlitField) -> HerglotzSlitForm:
    if b.b_m2 > 0:
        return slit_to_herglotz(b)
    # complete diagnostic field: gamma = 0, same conversion otherwise
    b_m2, b_m1, b0, b1 = b.coefficients
    return HerglotzSlitForm(complex(b0 / 2.0, b1 - b_m1 / 4.0), b_m1 / 2.0 + 2.0 * b1, 0.0)


def herglotz_field(spec: ChainSpec, t: float, z):
    """``V(t, z)`` evaluated in the spec's own domain."""
    field_ = DiskField.of(spec)
    phi = to_disk(spec.domain)
    w = phi.apply(z)
    return field_(np.full(np.shape(w), float(t)), w) / phi.derivative(z)


# --------------------------------------------------------------------------
# evolution


@dataclass
class ChainState:
    initial: np.ndarray
    values: np.ndarray
    alive: np.ndarray
    explosion_times: np.ndarray
    time: float
    error_estimate: np.ndarray | None = None
    derivatives: np.ndarray | None = None
    save_times: np.ndarray | None = None
    history: np.ndarray | None = None  # values at save_times, shape (n, k)
    derivative_history: np.ndarray | None = None

    def to_csv(self, path) -> None:
        write_state_csv(path, self.initial, self.alive, self.explosion_times, self.values)


def write_state_csv(path, initial, alive, explosion_times, values) -> None:
    """Per-point rows ``re0,im0,alive,T_explode,re,im``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re0", "im0", "alive", "T_explode", "re", "im"])
        for z0, a, te, z in zip(initial, alive, explosion_times, values):
            z0, z = complex(z0), complex(z)
            w.writerow([repr(z0.real), repr(z0.imag), int(a), repr(float(te)),
                        repr(z.real), repr(z.imag)])


def _driver_breaks(u: DrivingPath, lo: float, hi: float):
    t = u.times
    return t[(t >= lo) & (t <= hi)]


def _check_horizon(u: DrivingPath, T: float):
    if T > u.horizon * (1 + 1e-12) + 1e-12:
        raise ConfigurationError(f"driving path ends at {u.horizon}, before T = {T}")


def integrate_disk(field_: DiskField, z, t0: float, t1: float, *, derivative=False,
                   options: SolverOptions | None = None, save_at=None):
    """Integrate disk points (and optionally ``g'``) under ``dg/dt = -V(t, g)``."""
    opt = options or SolverOptions()
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    y0 = np.stack([z, np.ones_like(z)], axis=1) if derivative else z[:, None]

    def rhs(t, y):
        if derivative:
            v, dv = field_.with_derivative(t, y[:, 0])
            return np.stack([-v, -dv * y[:, 1]], axis=1)
        return -field_(t, y[:, 0])[:, None]

    step_limit = is_dead = None
    if field_.has_pole:
        def step_limit(t, y):
            g = y[:, 0]
            dist = np.abs(g - field_.pole(t))
            speed = np.abs(field_(t, g))
            with np.errstate(divide="ignore", invalid="ignore"):
                cap = opt.step_cap * dist / speed
            return np.where(np.isnan(cap), opt.h_min, np.where(speed == 0, np.inf, cap))

        def is_dead(t, y):
            g = y[:, 0]
            return (np.abs(g - field_.pole(t)) < opt.eps_blowup) | (np.abs(g) > 1 + 1e-9)
    else:
        def is_dead(t, y):
            return np.abs(y[:, 0]) > 1 + 1e-9

    lo, hi = min(t0, t1), max(t0, t1)
    return solve(rhs, t0, y0, t1, options=opt, breakpoints=_driver_breaks(field_.u, lo, hi),
                 save_at=save_at, step_limit=step_limit, is_dead=is_dead)


def evolve(spec: ChainSpec, points, T: float, options: SolverOptions | None = None, *,
           t_start: float = 0.0, derivative: bool = False, save_at=None) -> ChainState:
    """Evolve points of the spec's domain from ``t_start`` to ``T``.

    Dead points carry ``nan`` values and their detection time in
    ``explosion_times``; survivors carry ``g_T(z)`` and ``inf``.
    """
    if not T >= t_start:
        raise ConfigurationError("T must not precede the start time")
    _check_horizon(spec.u, T)
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    phi = to_disk(spec.domain)
    zd = phi.apply(points)
    if np.any(np.abs(zd) >= 1.0) or not np.all(np.isfinite(zd)):
        raise ConfigurationError("initial points must lie inside the domain")
    field_ = DiskField.of(spec)
    sol = integrate_disk(field_, zd, t_start, T, derivative=derivative, options=options,
                         save_at=save_at)
    back = phi.inverse()
    gd = sol.y[:, 0]
    values = np.where(sol.alive, back.apply(np.where(sol.alive, gd, 0)), np.nan + 0j)
    state = ChainState(points, values, sol.alive.copy(), sol.death_time.copy(), float(T),
                       sol.error_estimate)
    if derivative:
        d = sol.y[:, 1] * phi.derivative(points) / phi.derivative(np.where(sol.alive, values, 0))
        state.derivatives = np.where(sol.alive, d, np.nan + 0j)
    if save_at is not None:
        state.save_times = np.asarray(save_at, dtype=float)
        hist = sol.saved[:, :, 0]
        state.history = back.apply(np.where(np.isnan(hist), 0, hist))
        state.history[np.isnan(hist)] = np.nan
        if derivative:
            gh = state.history
            dh = (sol.saved[:, :, 1] * phi.derivative(points)[:, None]
                  / phi.derivative(np.where(np.isnan(gh), 0, gh)))
            dh[np.isnan(hist)] = np.nan
            state.derivative_history = dh
    return state


def derivative_at(spec: ChainSpec, z0: complex, t: float,
                  options: SolverOptions | None = None) -> complex:
    """``g_t'(z0)`` from the variational equation ``w' = -V'(t, g) w``."""
    st = evolve(spec, [z0], t, options, derivative=True)
    if not st.alive[0]:
        raise ExplosionError(f"{z0} explodes at t = {st.explosion_times[0]:.6g} < {t}")
    return complex(st.derivatives[0])


def schwarz_pick_ratio(spec: ChainSpec, t: float, options: SolverOptions | None = None) -> float:
    """``(1 - |g_t(0)|^2) / |g_t'(0)|``, the Schwarz-Pick ratio of ``g_t^{-1}`` at ``g_t(0)``.

    It never exceeds one, and equals one exactly when every ``g_t`` is an
    automorphism (complete field in place of ``b``).
    """
    if spec.domain is not DISK:
        raise ConfigurationError("the Schwarz-Pick ratio is defined for disk chains")
    st = evolve(spec, [0j], t, options, derivative=True)
    if not st.alive[0]:
        raise ExplosionError(f"the origin is swallowed at t = {st.explosion_times[0]:.6g}")
    g0 = st.values[0]
    return float((1 - abs(g0) ** 2) / abs(st.derivatives[0]))


# --------------------------------------------------------------------------
# traces


@dataclass
class Trace:
    times: np.ndarray
    tips: np.ndarray
    epsilon: float
    ok: np.ndarray = field(default=None)
    domain: CanonicalDomain = DISK

    def __post_init__(self):
        if self.ok is None:
            self.ok = np.ones(self.times.shape, dtype=bool)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re", "im"])
            for t, z in zip(self.times, self.tips):
                z = complex(z)
                w.writerow([repr(float(t)), repr(z.real), repr(z.imag)])


def sample_times(u: DrivingPath, T: float, dt: float | None = None):
    """Driver grid points in ``[0, T]`` thinned to spacing ``dt`` (nearest samples)."""
    grid = u.times[u.times <= T * (1 + 1e-12)]
    if dt is None:
        return grid
    want = np.arange(0.0, T + 0.5 * dt, dt)
    idx = np.unique(np.clip(np.searchsorted(grid, want), 0, grid.size - 1))
    return grid[idx]


def trace(spec: ChainSpec, T: float | None = None, dt: float | None = None,
          epsilon: float = 1e-3, options: SolverOptions | None = None, *,
          times=None) -> Trace:
    """Tip samples ``gamma(t) ~ g_t^{-1}((1 - eps) h_{u_t}^{-1}(1))``.

    Each sample integrates ``y' = -V(s, y)`` backwards from ``s = t`` to ``0``;
    all samples are integrated together.
    """
    if not 0 < epsilon < 0.1:
        raise ConfigurationError("epsilon must lie in (0, 0.1)")
    if times is None:
        if T is None:
            raise ConfigurationError("give T or explicit sample times")
        _check_horizon(spec.u, T)
        times = sample_times(spec.u, T, dt)
    times = np.asarray(times, dtype=float)
    _check_horizon(spec.u, float(times.max()))
    field_ = DiskField.of(spec)
    start = (1 - epsilon) * field_.pole(times)
    opt = options or SolverOptions()
    opt = replace(opt, first_step=min(opt.first_step, epsilon ** 2))

    def rhs(t, y):
        return -field_(t, y[:, 0])[:, None]

    def step_limit(t, y):
        g = y[:, 0]
        dist = np.abs(g - field_.pole(t))
        speed = np.abs(field_(t, g))
        with np.errstate(divide="ignore", invalid="ignore"):
            cap = opt.step_cap * dist / speed
        return np.where(np.isnan(cap), opt.h_min, np.where(speed == 0, np.inf, cap))

    def is_dead(t, y):
        return np.abs(y[:, 0]) > 1 + 1e-9

    sol = solve(rhs, times, start[:, None], 0.0, options=opt,
                breakpoints=_driver_breaks(spec.u, 0.0, float(times.max())),
                step_limit=step_limit if field_.has_pole else None, is_dead=is_dead)
    ok = sol.alive
    back = to_disk(spec.domain).inverse()
    tips = np.where(ok, back.apply(np.where(ok, sol.y[:, 0], 0)), np.nan + 0j)
    return Trace(times, tips, float(epsilon), ok, spec.domain)
