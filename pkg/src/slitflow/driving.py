"""Driving paths: sampled continuous real functions with ``u_0 = 0``."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

BLOCK = 1024  # normals per counter block of the Brownian generator


@dataclass(frozen=True)
class RandomSeed:
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = int(getattr(self, name))
            if not 0 <= v < 2 ** 64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")
            object.__setattr__(self, name, v)


class DrivingPath:
    """Piecewise-linear real path through ``(times[i], values[i])``."""

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float).copy()
        values = np.asarray(values, dtype=float).copy()
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("times and values must be 1-d arrays of equal length >= 2")
        if times[0] != 0.0:
            raise ValueError("driving paths start at t = 0")
        if values[0] != 0.0:
            raise ValueError("driving paths start at u_0 = 0")
        if not np.all(np.diff(times) > 0):
            raise ValueError("sample times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        self.times = times
        self.values = values

    def __repr__(self):
        return f"DrivingPath(n={self.times.size}, T={self.horizon:g})"

    def __eq__(self, other):
        return (isinstance(other, DrivingPath) and np.array_equal(self.times, other.times)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        """Typical sample spacing (median)."""
        return float(np.median(np.diff(self.times)))

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    @classmethod
    def from_function(cls, f: Callable, dt: float, T: float) -> "DrivingPath":
        t = uniform_grid(dt, T)
        v = np.asarray(f(t), dtype=float)
        return cls(t, v - v[0])

    def resample(self, times) -> "DrivingPath":
        times = np.asarray(times, dtype=float)
        return DrivingPath(times, self(times))

    def coarsen(self, factor: int) -> "DrivingPath":
        """Keep every ``factor``-th sample (sums the increments of each block)."""
        idx = np.arange(0, self.times.size, int(factor))
        return DrivingPath(self.times[idx], self.values[idx])

    def truncated(self, T: float) -> "DrivingPath":
        keep = self.times < T - 1e-12
        t = np.append(self.times[keep], T)
        return DrivingPath(t, self(t))

    def shifted(self, s: float) -> "DrivingPath":
        """The path ``tau -> u_{s+tau} - u_s`` on the remaining horizon."""
        rest = self.times[self.times > s + 1e-12]
        t = np.concatenate([[s], rest])
        return DrivingPath(t - s, self(t) - float(self(s)))

    def increments(self):
        return np.diff(self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "u"])
            for t, u in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(u))])

    @classmethod
    def from_csv(cls, path) -> "DrivingPath":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["t", "u"]:
            raise ValueError(f"{path}: expected header 't,u'")
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
        return cls(data[:, 0], data[:, 1])


def uniform_grid(dt: float, T: float):
    """``0, dt, 2 dt, ...`` up to the first multiple of ``dt`` that reaches ``T``."""
    if not (dt > 0 and T > 0):
        raise ValueError("dt and T must be positive")
    n = max(1, int(np.ceil(T / dt - 1e-9)))
    return np.arange(n + 1) * dt


def standard_normals(seed: RandomSeed, start: int, count: int):
    """Normals ``Z_start .. Z_{start+count-1}`` of the stream keyed by ``seed``.

    Each block of ``BLOCK`` draws comes from a Philox generator whose counter
    is set to the block index, so any slice is reproducible on its own.
    """
    out = np.empty(count)
    first = start // BLOCK
    last = (start + count - 1) // BLOCK if count else first - 1
    pos = 0
    for block in range(first, last + 1):
        bitgen = np.random.Philox(key=[seed.seed, seed.stream], counter=[block, 0, 0, 0])
        z = np.random.Generator(bitgen).standard_normal(BLOCK)
        lo = max(start - block * BLOCK, 0)
        hi = min(start + count - block * BLOCK, BLOCK)
        out[pos:pos + hi - lo] = z[lo:hi]
        pos += hi - lo
    return out


def brownian_increments(kappa: float, dt: float, seed: RandomSeed, start: int, count: int):
    """Increments ``sqrt(kappa dt) Z_i`` for steps ``start .. start+count-1``."""
    return np.sqrt(kappa * dt) * standard_normals(seed, start, count)


def brownian_path(kappa: float, dt: float, T: float, seed: RandomSeed | int = 0) -> DrivingPath:
    """``u = sqrt(kappa) B`` sampled on a uniform grid of step ``dt``."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if isinstance(seed, (int, np.integer)):
        seed = RandomSeed(int(seed))
    t = uniform_grid(dt, T)
    steps = brownian_increments(kappa, dt, seed, 0, t.size - 1)
    return DrivingPath(t, np.concatenate([[0.0], np.cumsum(steps)]))


def tangent_angle_constant(theta: float) -> float:
    if not 0 < theta < np.pi:
        raise ValueError("tangent angle must lie in (0, pi)")
    return 2 * (np.pi - 2 * theta) / np.sqrt(theta * (np.pi - theta))


def deterministic_path(kind: str, params: dict | None = None, dt: float = 1e-3,
                       T: float = 1.0) -> DrivingPath:
    """Sampled named path: ``constant0``, ``linear`` (mu), ``sqrt`` (c), ``tangent_angle`` (theta)."""
    params = dict(params or {})
    kind = kind.lower()
    if kind in ("constant0", "zero"):
        f = np.zeros_like
    elif kind == "linear":
        mu = float(params.get("mu", 0.0))
        f = lambda t: mu * t
    elif kind == "sqrt":
        c = float(params.get("c", 0.0))
        f = lambda t: c * np.sqrt(t)
    elif kind == "tangent_angle":
        c = tangent_angle_constant(float(params["theta"]))
        f = lambda t: c * np.sqrt(t)
    elif kind == "sine":
        amp = float(params.get("amplitude", 1.0))
        freq = float(params.get("frequency", 1.0))
        f = lambda t: amp * np.sin(freq * t)
    else:
        raise ValueError(f"unknown deterministic path kind {kind!r}")
    return DrivingPath.from_function(f, dt, T)


def holder_half_seminorm(u: DrivingPath, window: float) -> float:
    """``max |u_t - u_s| / sqrt|t - s|`` over sample pairs with ``|t - s| <= window``."""
    if not window > 0:
        raise ValueError("window must be positive")
    t, v = u.times, u.values
    best = 0.0
    for lag in range(1, t.size):
        gap = t[lag:] - t[:-lag]
        ok = gap <= window * (1 + 1e-12)
        if not ok.any():
            break
        ratio = np.abs(v[lag:] - v[:-lag])[ok] / np.sqrt(gap[ok])
        best = max(best, float(ratio.max()))
    return best
