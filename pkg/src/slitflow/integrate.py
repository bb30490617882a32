"""Adaptive Dormand-Prince 5(4) integration of many complex trajectories at once.

Each row of the state array is an independent trajectory with its own time,
step size and termination status; the rows advance in lockstep only in the
sense that one numpy pass evaluates a stage for every active row.  Steps are
never allowed to cross a breakpoint, so right-hand sides that are merely
piecewise smooth in time (linear interpolation of sampled drivers) keep the
error estimator honest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class SolverOptions:
    """Tolerances and safeguards shared by the chain and reparameterization solvers."""

    rtol: float = 1e-10
    atol: float = 1e-12
    step_cap: float = 0.5
    eps_blowup: float = 1e-6
    h_min: float = 1e-14
    first_step: float = 1e-3
    max_iter: int = 5_000_000


@dataclass
class Solution:
    t: np.ndarray            # final time per row
    y: np.ndarray            # final state per row, shape (n, m)
    alive: np.ndarray        # rows that reached their end time
    death_time: np.ndarray   # detection time for dead rows, inf otherwise
    saved: np.ndarray | None  # states at save times, shape (n, k, m), nan where unreached
    error_estimate: np.ndarray  # accumulated local error estimates per row
    steps: int
    underflow: np.ndarray    # rows that died by step underflow


def solve(rhs: Callable, t0, y0, t1, *, options: SolverOptions | None = None,
          breakpoints=None, save_at=None, step_limit: Callable | None = None,
          is_dead: Callable | None = None, after_step: Callable | None = None) -> Solution:
    """Integrate ``y' = rhs(t, y)`` row-wise from ``t0`` to ``t1``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y)`` with ``t`` of shape ``(k,)`` and ``y`` of shape ``(k, m)``.
    t0, t1 : float or array
        Start and end times per row; all rows must move in the same direction.
    y0 : array
        Initial states, shape ``(n, m)`` (a 1-d array is treated as ``m = 1``).
    breakpoints : array, optional
        Times that steps may land on but never cross.
    save_at : array, optional
        Times at which states are recorded; they are added to the breakpoints.
    step_limit : callable, optional
        ``step_limit(t, y)`` returning a positive per-row bound on ``|h|``.
    is_dead : callable, optional
        ``is_dead(t, y)`` returning a mask of rows to terminate after a step.
    after_step : callable, optional
        ``after_step(rows, t, y)`` invoked with accepted rows (for stateful
        right-hand sides that track a branch).
    """
    opt = options or SolverOptions()
    y = np.array(y0, dtype=complex)
    if y.ndim == 1:
        y = y[:, None]
    n, m = y.shape
    t = np.broadcast_to(np.asarray(t0, dtype=float), (n,)).copy()
    tend = np.broadcast_to(np.asarray(t1, dtype=float), (n,)).copy()
    span = tend - t
    direction = 1.0 if np.all(span >= 0) else -1.0
    if direction < 0 and np.any(span > 0):
        raise ValueError("all rows must integrate in the same direction")

    bps = np.unique(np.concatenate([
        np.asarray(breakpoints if breakpoints is not None else [], dtype=float),
        np.asarray(save_at if save_at is not None else [], dtype=float),
    ]))
    saves = None if save_at is None else np.asarray(save_at, dtype=float)
    saved = None
    if saves is not None:
        saved = np.full((n, saves.size, m), np.nan + 0j)
        k0 = np.searchsorted(saves, t)
        hit = (k0 < saves.size) & (saves[np.minimum(k0, saves.size - 1)] == t)
        saved[np.nonzero(hit)[0], k0[hit]] = y[hit]

    h = np.minimum(np.abs(span), opt.first_step)
    alive = np.ones(n, dtype=bool)
    done = np.abs(span) == 0
    underflow = np.zeros(n, dtype=bool)
    death = np.full(n, np.inf)
    err_acc = np.zeros(n)

    steps = 0
    while True:
        rows = np.nonzero(alive & ~done)[0]
        if rows.size == 0:
            break
        steps += 1
        if steps > opt.max_iter:
            raise RuntimeError("integration exceeded the iteration budget")
        tr = t[rows]
        yr = y[rows]
        hr = h[rows]

        # limit by end time, next breakpoint and the caller's cap
        limit = np.abs(tend[rows] - tr)
        if bps.size:
            # breakpoints within rounding distance of the current time are behind us
            slack = 1e-13 * np.maximum(1.0, np.abs(tr))
            if direction > 0:
                j = np.searchsorted(bps, tr + slack, side="right")
                nxt = np.where(j < bps.size, bps[np.minimum(j, bps.size - 1)], np.inf)
                limit = np.minimum(limit, nxt - tr)
            else:
                j = np.searchsorted(bps, tr - slack, side="left") - 1
                prv = np.where(j >= 0, bps[np.maximum(j, 0)], -np.inf)
                limit = np.minimum(limit, tr - prv)
        if step_limit is not None:
            hr = np.minimum(hr, step_limit(tr, yr))
        snap = hr >= limit * (1 - 1e-12)
        hr = np.where(snap, limit, hr)

        tiny = hr < opt.h_min
        if np.any(tiny):
            bad = rows[tiny & ~snap]
            alive[bad] = False
            underflow[bad] = True
            death[bad] = t[bad]
            keep = ~tiny | snap
            rows, tr, yr, hr, snap, limit = (a[keep] for a in (rows, tr, yr, hr, snap, limit))
            if rows.size == 0:
                continue

        hs = direction * hr
        k = np.empty((7,) + yr.shape, dtype=complex)
        with np.errstate(all="ignore"):
            k[0] = rhs(tr, yr)
            for i in range(1, 7):
                acc = yr.copy()
                for j, a in enumerate(_A[i]):
                    if a:
                        acc += (hs * a)[:, None] * k[j]
                k[i] = rhs(tr + _C[i] * hs, acc)
            ynew = yr + hs[:, None] * np.tensordot(_B5, k, axes=1)
            errv = hs[:, None] * np.tensordot(_E, k, axes=1)
            scale = opt.atol + opt.rtol * np.maximum(np.abs(yr), np.abs(ynew))
            err = np.max(np.abs(errv) / scale, axis=1)
        err = np.where(np.isfinite(err) & np.all(np.isfinite(ynew), axis=1), err, np.inf)
        ok = err <= 1.0

        with np.errstate(divide="ignore"):
            factor = np.clip(0.9 * np.power(np.maximum(err, 1e-10), -0.2), 0.2, 5.0)
        factor = np.where(ok, factor, np.minimum(factor, 0.5))
        h[rows] = hr * factor

        acc_rows = rows[ok]
        if acc_rows.size:
            tn = np.where(snap[ok], tr[ok] + direction * limit[ok], tr[ok] + hs[ok])
            # land exactly on the end time or the breakpoint we clipped to
            tn = np.where(snap[ok] & (np.abs(tend[acc_rows] - tr[ok]) <= limit[ok] * (1 + 1e-12)),
                          tend[acc_rows], tn)
            if bps.size:
                jj = np.clip(np.searchsorted(bps, tn), 0, bps.size - 1)
                near = np.abs(bps[jj] - tn) <= 1e-13 * np.maximum(1.0, np.abs(tn))
                tn = np.where(snap[ok] & near, bps[jj], tn)
            t[acc_rows] = tn
            y[acc_rows] = ynew[ok]
            err_acc[acc_rows] += np.max(np.abs(errv[ok]), axis=1)
            if saves is not None:
                tol = 1e-13 * np.maximum(1.0, np.abs(tn))
                kk = np.searchsorted(saves, tn - tol)
                kk_c = np.minimum(kk, saves.size - 1)
                hit = (kk < saves.size) & (np.abs(saves[kk_c] - tn) <= tol)
                saved[acc_rows[hit], kk_c[hit]] = ynew[ok][hit]
            finished = tn == tend[acc_rows]
            done[acc_rows[finished]] = True
            if is_dead is not None:
                dead = np.asarray(is_dead(tn, ynew[ok]), dtype=bool)
                dead_rows = acc_rows[dead]
                alive[dead_rows] = False
                done[dead_rows] = False
                death[dead_rows] = t[dead_rows]
            if after_step is not None:
                after_step(acc_rows, tn, ynew[ok])

    return Solution(t, y, alive, death, saved, err_acc, steps, underflow)
