"""Direct simulation of the slit holomorphic stochastic flow.

``dG = -b(G) dt + sqrt(kappa) sigma(G) o dB`` is integrated on the disk with
a fixed step, where the marked pole of ``b`` stays at ``1``.  The driving
increments are those of :func:`~slitflow.driving.brownian_path` for the same
seed, so ``G`` can be compared pathwise with ``h_{u_t} o g_t`` from the chain
solver.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .autoflow import flow_matrix
from .chain import ChainSpec, ConfigurationError, evolve
from .conformal import CanonicalDomain, to_disk
from .driving import DrivingPath, RandomSeed, brownian_increments, uniform_grid
from .fields import CompleteField, SlitField, preset_fields  # noqa: F401  (re-export)

DISK = CanonicalDomain.Disk


class Scheme(enum.Enum):
    EulerIto = "euler-ito"
    StratonovichHeun = "stratonovich-heun"


@dataclass(frozen=True)
class SdeConfig:
    kappa: float
    dt: float
    scheme: Scheme = Scheme.StratonovichHeun
    seed: RandomSeed = field(default_factory=RandomSeed)

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not isinstance(self.scheme, Scheme):
            object.__setattr__(self, "scheme", Scheme(self.scheme))
        if isinstance(self.seed, (int, np.integer)):
            object.__setattr__(self, "seed", RandomSeed(int(self.seed)))


def ito_drift(b: SlitField, sigma: CompleteField, kappa: float) -> Callable:
    """``z -> -b(z) + (kappa/2) sigma(z) sigma'(z)`` on the common domain."""
    if b.domain is not sigma.domain:
        raise ValueError("b and sigma must share a domain")

    def drift(z):
        return -b(z) + 0.5 * kappa * sigma(z) * sigma.derivative(z)

    return drift


@dataclass
class FlowResult:
    times: np.ndarray           # recorded times
    history: np.ndarray         # values at recorded times, shape (n, k); nan after death
    values: np.ndarray          # values at the final time
    alive: np.ndarray
    explosion_times: np.ndarray
    steps: int
    disk_values: np.ndarray = None  # final values in disk coordinates (for restarts)


class _DiskCoefficients:
    def __init__(self, b: SlitField, sigma: CompleteField):
        from .chain import _herglotz

        self.form = _herglotz(b.on(DISK))
        self.sigma = sigma.on(DISK)
        alpha, beta = self.sigma.alpha_beta()
        self.s_alpha = alpha
        self.s_beta = beta

    def b(self, w):
        f = self.form
        return f.alpha - w * (1j * f.beta + f.gamma * (1 + w) / (1 - w)) - np.conj(f.alpha) * w * w

    def s(self, w):
        return self.s_alpha - 1j * self.s_beta * w - np.conj(self.s_alpha) * w * w

    def ds(self, w):
        return -1j * self.s_beta - 2 * np.conj(self.s_alpha) * w


def simulate_flow(b: SlitField, sigma: CompleteField, config: SdeConfig, points, T: float, *,
                  driver: DrivingPath | None = None, start_step: int = 0, initial=None,
                  record_every: int = 1, step_cap: float = 0.5, eps_blowup: float = 1e-6,
                  max_substeps: int = 4096) -> FlowResult:
    """Fixed-step simulation of ``G_t`` for points of the fields' domain.

    The increments are ``sqrt(kappa dt) Z_i`` with ``Z_i`` drawn from the
    seeded stream starting at step ``start_step`` (so a run continued from a
    saved state with ``start_step = k`` reuses exactly the increments of one
    long run).  An explicit ``driver`` path overrides the generated noise.

    Near the pole a step whose predicted displacement exceeds ``step_cap``
    times the distance to the pole is split into equal substeps, each
    carrying an equal share of the time and noise increments.
    """
    if b.domain is not sigma.domain:
        raise ConfigurationError("b and sigma must share a domain")
    phi = to_disk(b.domain)
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    G = np.array(initial if initial is not None else phi.apply(points), dtype=complex)
    if np.any(np.abs(G) >= 1):
        raise ConfigurationError("initial points must lie inside the domain")
    coef = _DiskCoefficients(b, sigma)

    if driver is not None:
        grid = driver.times[driver.times <= T * (1 + 1e-12) + 1e-15]
        if grid[-1] < T * (1 - 1e-12):
            raise ConfigurationError("driver shorter than T")
        du = np.diff(driver(grid))
        hs = np.diff(grid)
        t0 = 0.0
    else:
        grid = uniform_grid(config.dt, T)
        n = grid.size - 1
        du = brownian_increments(config.kappa, config.dt, config.seed, start_step, n)
        hs = np.full(n, config.dt)
        t0 = start_step * config.dt
        grid = t0 + grid

    n_pts = G.size
    alive = np.ones(n_pts, dtype=bool)
    death = np.full(n_pts, np.inf)
    rec_idx = list(range(0, hs.size + 1, record_every))
    if rec_idx[-1] != hs.size:
        rec_idx.append(hs.size)
    hist = np.full((n_pts, len(rec_idx)), np.nan + 0j)
    hist[:, 0] = G
    kappa = config.kappa
    heun = config.scheme is Scheme.StratonovichHeun

    def step(g, h, dw):
        if heun:
            f0 = -coef.b(g)
            s0 = coef.s(g)
            pred = g + f0 * h + s0 * dw
            return g + 0.5 * (f0 - coef.b(pred)) * h + 0.5 * (s0 + coef.s(pred)) * dw
        s0 = coef.s(g)
        return g + (-coef.b(g) + 0.5 * kappa * s0 * coef.ds(g)) * h + s0 * dw

    def dead_mask(g):
        return ~np.isfinite(g) | (np.abs(g - 1) < eps_blowup) | (np.abs(g) > 1 + 1e-9)

    rec_pos = 1
    for i in range(hs.size):
        idx = np.nonzero(alive)[0]
        if idx.size:
            g = G[idx]
            h, dw = hs[i], du[i]
            with np.errstate(all="ignore"):
                move = np.abs(coef.b(g)) * h + np.abs(coef.s(g)) * abs(dw)
                dist = np.abs(g - 1)
                need = np.ceil(move / (step_cap * dist))
            need = np.where(np.isfinite(need), need, max_substeps)
            split = need > 1
            with np.errstate(all="ignore"):
                out = step(g, h, dw)
                if np.any(split):
                    m = int(min(max_substeps, need[split].max()))
                    gs = g[split]
                    for _ in range(m):
                        gs = step(gs, h / m, dw / m)
                    out[split] = gs
            G[idx] = out
            dead = dead_mask(out)
            if np.any(dead):
                alive[idx[dead]] = False
                death[idx[dead]] = grid[i + 1]
        if rec_pos < len(rec_idx) and rec_idx[rec_pos] == i + 1:
            hist[:, rec_pos] = np.where(alive, G, np.nan)
            rec_pos += 1

    back = phi.inverse()
    safe = np.where(np.isnan(hist), 0, hist)
    hist_dom = back.apply(safe)
    hist_dom[np.isnan(hist)] = np.nan
    final = np.where(alive, back.apply(np.where(alive, G, 0)), np.nan + 0j)
    return FlowResult(grid[rec_idx], hist_dom, final, alive, death, hs.size,
                      np.where(alive, G, np.nan))


def flow_map_values(sigma: CompleteField, u_values, z):
    """``h_{u_k}(z_k)`` in the field's domain for paired arrays ``u_values`` and ``z``."""
    phi = to_disk(sigma.domain)
    p, q = flow_matrix(sigma.on(DISK), np.asarray(u_values, dtype=float))
    w = phi.apply(z)
    return phi.inverse().apply((p * w + q) / (np.conj(q) * w + np.conj(p)))


def composition_check(spec: ChainSpec, config: SdeConfig, points=None, n_records: int = 10,
                      T: float | None = None) -> float:
    """Largest ``|G_t(z) - h_{u_t}(g_t(z))|`` over recorded times and jointly alive points.

    ``G`` is simulated with the increments of ``spec.u`` itself, so the two
    sides share the driving path exactly.
    """
    T = spec.u.horizon if T is None else T
    if points is None:
        points = default_points(spec.domain)
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    grid = spec.u.times[spec.u.times <= T * (1 + 1e-12)]
    n = grid.size - 1
    every = max(1, n // n_records)
    flow = simulate_flow(spec.b, spec.sigma, config, points, T, driver=spec.u,
                         record_every=every)
    chain = evolve(spec, points, T, save_at=flow.times)
    u_rec = spec.u(flow.times)
    worst = 0.0
    for k, t in enumerate(flow.times):
        g = chain.history[:, k]
        G = flow.history[:, k]
        ok = np.isfinite(g) & np.isfinite(G)
        if not ok.any():
            continue
        target = flow_map_values(spec.sigma, np.full(ok.sum(), u_rec[k]), g[ok])
        worst = max(worst, float(np.max(np.abs(G[ok] - target))))
    return worst


def default_points(domain, n: int = 20):
    """Deterministic interior sample points away from the marked point."""
    domain = CanonicalDomain.parse(domain)
    ang = np.linspace(0.3, 2 * np.pi - 0.3, n)
    w = 0.5 * np.exp(1j * ang)
    return to_disk(domain).inverse().apply(w)
