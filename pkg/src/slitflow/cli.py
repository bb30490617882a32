"""Command-line front end.

Subcommands ``fields``, ``simulate``, ``trace``, ``transform``, ``reparam`` and
``stats`` read one JSON run configuration and write ``<prefix>_*.csv`` /
``<prefix>_summary.json``.  Exit codes: 0 success, 2 invalid configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields as dc_fields

import numpy as np

from . import __version__
from .autoflow import flow_class
from .chain import ChainSpec, ConfigurationError, ExplosionError, trace, write_state_csv
from .conformal import CanonicalDomain, to_disk
from .driving import DrivingPath, RandomSeed, brownian_path, deterministic_path
from .fields import (CompleteField, Preset, SlitField, field_in_disk, preset_fields,
                     semicomplete_check, slit_to_herglotz)
from .stochastic import SdeConfig, simulate_flow
from .transforms import (ElementaryTransform, TransformKind, apply_all, normalization_residuals,
                         normalize, normalize_stochastic)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("slitflow")

DETERMINISTIC_DRIVERS = ("zero", "constant0", "linear", "sqrt", "tangent_angle", "sine")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


class NumericalFailure(RuntimeError):
    pass


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DriverConfig:
    type: str = "brownian"
    kappa: float = 0.0
    mu: float = 0.0
    c: float = 0.0
    seed: int = 0
    dt: float = 1e-3
    theta: float | None = None
    amplitude: float | None = None
    frequency: float | None = None
    path: str | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class GridConfig:
    type: str = "circle"
    n: int = 20
    radius: float = 0.5
    points: tuple = ()

    def to_dict(self) -> dict:
        d = {"type": self.type}
        if self.type == "points":
            d["points"] = [list(p) for p in self.points]
        else:
            d.update(n=self.n, radius=self.radius)
        return d


@dataclass(frozen=True)
class RunConfig:
    domain: str
    b: tuple
    sigma: tuple
    driver: DriverConfig = field(default_factory=DriverConfig)
    T: float = 1.0
    trace_epsilon: float = 1e-3
    grid: GridConfig = field(default_factory=GridConfig)
    output: str = "slitflow"
    transforms: tuple = ()
    target: dict | None = None
    n_paths: int = 10
    trace_dt: float | None = None

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "domain": self.domain,
            "b": list(self.b),
            "sigma": list(self.sigma),
            "driver": self.driver.to_dict(),
            "T": self.T,
            "trace_epsilon": self.trace_epsilon,
            "grid": self.grid.to_dict(),
            "output": self.output,
            "n_paths": self.n_paths,
        }
        if self.transforms:
            d["transforms"] = [list(t) for t in self.transforms]
        if self.target is not None:
            d["target"] = json.loads(json.dumps(self.target))
        if self.trace_dt is not None:
            d["trace_dt"] = self.trace_dt
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("top level: expected a JSON object")
        known = {f.name for f in dc_fields(cls)} | {"preset"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown field(s): {', '.join(sorted(extra))}")
        d = dict(data)
        if "preset" in d:
            try:
                preset = Preset.parse(d.pop("preset"))
            except ValueError as exc:
                raise ConfigError(f"field 'preset': {exc}") from None
            b, s = preset_fields(preset)
            d.setdefault("b", list(b.coefficients))
            d.setdefault("sigma", list(s.coefficients))
            d.setdefault("domain", b.domain.value)
        for key in ("domain", "b", "sigma"):
            if key not in d:
                raise ConfigError(f"field '{key}': missing (give it or a 'preset')")
        try:
            domain = CanonicalDomain.parse(d["domain"]).value
        except ValueError as exc:
            raise ConfigError(f"field 'domain': {exc}") from None
        cfg = cls(
            domain=domain,
            b=_reals(d["b"], 4, "b"),
            sigma=_reals(d["sigma"], 3, "sigma"),
            driver=_driver(d.get("driver", {})),
            T=_positive(d.get("T", 1.0), "T"),
            trace_epsilon=_positive(d.get("trace_epsilon", 1e-3), "trace_epsilon"),
            grid=_grid(d.get("grid", {})),
            output=str(d.get("output", "slitflow")),
            transforms=_transforms(d.get("transforms", [])),
            target=_target(d.get("target")),
            n_paths=int(_positive(d.get("n_paths", 10), "n_paths")),
            trace_dt=None if d.get("trace_dt") is None else _positive(d["trace_dt"], "trace_dt"),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str, source: str = "<config>") -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_json(fh.read(), str(path))

    # -- validation and model objects ---------------------------------------

    def validate(self) -> None:
        if not self.b[0] > 0:
            raise ConfigError(f"field 'b': slit fields require b_m2 > 0 (got {self.b[0]:g}); "
                              "the ell_{-2} coefficient must be positive")
        if self.sigma[0] == 0:
            raise ConfigError("field 'sigma': sigma_m1 must be nonzero")
        if not 0 < self.trace_epsilon < 0.1:
            raise ConfigError("field 'trace_epsilon': must lie in (0, 0.1)")
        if self.driver.dt > self.T:
            raise ConfigError("field 'driver.dt': step exceeds the horizon T")

    def fields(self) -> tuple:
        return (SlitField(*self.b, domain=self.domain),
                CompleteField(*self.sigma, domain=self.domain))

    def driving_path(self, horizon: float | None = None) -> DrivingPath:
        T = self.T if horizon is None else horizon
        d = self.driver
        if d.type == "brownian":
            u = brownian_path(d.kappa, d.dt, T, RandomSeed(d.seed))
            if d.mu:
                u = DrivingPath(u.times, u.values + d.mu * u.times)
            return u
        if d.type == "csv":
            return DrivingPath.from_csv(d.path)
        params = {"mu": d.mu, "c": d.c}
        if d.theta is not None:
            params["theta"] = d.theta
        if d.amplitude is not None:
            params["amplitude"] = d.amplitude
        if d.frequency is not None:
            params["frequency"] = d.frequency
        return deterministic_path(d.type, params, d.dt, T)

    def spec(self) -> ChainSpec:
        b, s = self.fields()
        return ChainSpec(b, s, self.driving_path())

    def points(self):
        g = self.grid
        if g.type == "points":
            return np.array([complex(x, y) for x, y in g.points])
        ang = np.linspace(0.3, 2 * np.pi - 0.3, g.n)
        return to_disk(self.domain).inverse().apply(g.radius * np.exp(1j * ang))


def _reals(value, n, name):
    try:
        out = tuple(float(x) for x in value)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}': expected a list of {n} reals") from None
    if len(out) != n or not all(math.isfinite(x) for x in out):
        raise ConfigError(f"field '{name}': expected a list of {n} finite reals, got {value!r}")
    return out


def _positive(value, name):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}': expected a number") from None
    if not v > 0 or not math.isfinite(v):
        raise ConfigError(f"field '{name}': must be positive and finite")
    return v


def _driver(data) -> DriverConfig:
    if not isinstance(data, dict):
        raise ConfigError("field 'driver': expected an object")
    known = {f.name for f in dc_fields(DriverConfig)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"field 'driver': unknown key(s) {', '.join(sorted(extra))}")
    kind = str(data.get("type", "brownian")).lower()
    if kind not in ("brownian", "csv") + DETERMINISTIC_DRIVERS:
        raise ConfigError(f"field 'driver.type': unknown driver {kind!r}")
    try:
        cfg = DriverConfig(
            type=kind,
            kappa=float(data.get("kappa", 0.0)),
            mu=float(data.get("mu", 0.0)),
            c=float(data.get("c", 0.0)),
            seed=int(data.get("seed", 0)),
            dt=float(data.get("dt", 1e-3)),
            theta=None if data.get("theta") is None else float(data["theta"]),
            amplitude=None if data.get("amplitude") is None else float(data["amplitude"]),
            frequency=None if data.get("frequency") is None else float(data["frequency"]),
            path=data.get("path"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'driver': {exc}") from None
    if cfg.kappa < 0:
        raise ConfigError("field 'driver.kappa': must be nonnegative")
    if not cfg.dt > 0:
        raise ConfigError("field 'driver.dt': must be positive")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("field 'driver.seed': must be an unsigned 64-bit integer")
    if kind == "tangent_angle" and not (cfg.theta is not None and 0 < cfg.theta < math.pi):
        raise ConfigError("field 'driver.theta': tangent_angle needs theta in (0, pi)")
    if kind == "csv" and not cfg.path:
        raise ConfigError("field 'driver.path': csv driver needs a path")
    return cfg


def _grid(data) -> GridConfig:
    if not isinstance(data, dict):
        raise ConfigError("field 'grid': expected an object")
    kind = str(data.get("type", "circle"))
    if kind == "points":
        try:
            pts = tuple((float(p[0]), float(p[1])) for p in data["points"])
        except (KeyError, TypeError, ValueError, IndexError):
            raise ConfigError("field 'grid.points': expected a list of [re, im] pairs") from None
        if not pts:
            raise ConfigError("field 'grid.points': empty")
        return GridConfig("points", len(pts), 0.0, pts)
    if kind != "circle":
        raise ConfigError(f"field 'grid.type': unknown grid {kind!r}")
    n = int(data.get("n", 20))
    r = float(data.get("radius", 0.5))
    if n < 1 or not 0 < r < 1:
        raise ConfigError("field 'grid': need n >= 1 and 0 < radius < 1")
    return GridConfig("circle", n, r)


def _transforms(data) -> tuple:
    out = []
    for i, item in enumerate(data):
        try:
            tr = ElementaryTransform.parse(item)
        except (ConfigurationError, ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"field 'transforms[{i}]': {exc}") from None
        out.append((tr.kind.value, tr.c))
    return tuple(out)


def _target(data):
    if data is None:
        return None
    if not isinstance(data, dict):
        raise ConfigError("field 'target': expected an object")
    if "preset" in data:
        try:
            Preset.parse(data["preset"])
        except ValueError as exc:
            raise ConfigError(f"field 'target.preset': {exc}") from None
        return {"preset": str(data["preset"])}
    return {"b": list(_reals(data.get("b"), 4, "target.b")),
            "sigma": list(_reals(data.get("sigma"), 3, "target.sigma"))}


# --------------------------------------------------------------------------
# commands


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not serializable: {type(obj).__name__}")


def cmd_fields(cfg: RunConfig, args) -> dict:
    b, s = cfg.fields()
    h = slit_to_herglotz(b)
    semi = semicomplete_check(field_in_disk(b))
    fc = flow_class(s)
    report = {
        "domain": cfg.domain,
        "b": list(b.coefficients),
        "sigma": list(s.coefficients),
        "b_complete": False,
        "b_semicomplete": bool(semi.ok),
        "b_min_re_q": semi.min_re_q,
        "sigma_complete": True,
        "sigma_flow_class": fc.kind.value,
        "sigma_discriminant": fc.discriminant,
        "herglotz": {"alpha": [h.alpha.real, h.alpha.imag], "beta": h.beta, "gamma": h.gamma},
        "normalization_residuals": list(normalization_residuals(b.coefficients, s.coefficients)),
    }
    print(f"domain: {cfg.domain}")
    print(f"b = {list(b.coefficients)}: complete? no   semicomplete? {'yes' if semi.ok else 'NO'}")
    print(f"sigma = {list(s.coefficients)}: complete? yes   flow class: {fc.kind.value}")
    print(f"Herglotz form: alpha = {h.alpha.real:.12g}{h.alpha.imag:+.12g}i, "
          f"beta = {h.beta:.12g}, gamma = {h.gamma:.12g}")
    if not semi.ok:
        raise ConfigError("field 'b': the field fails the semicompleteness check")
    return report


def cmd_simulate(cfg: RunConfig, args) -> dict:
    b, s = cfg.fields()
    u = cfg.driving_path()
    pts = cfg.points()
    res = simulate_flow(b, s, SdeConfig(cfg.driver.kappa, cfg.driver.dt,
                                        seed=RandomSeed(cfg.driver.seed)),
                        pts, cfg.T, driver=u)
    if not res.alive.any():
        raise NumericalFailure("every point exploded before the final time")
    path = f"{args.out}_state.csv"
    write_state_csv(path, pts, res.alive, res.explosion_times, res.values)
    print(f"{int(res.alive.sum())}/{res.alive.size} points alive at T = {cfg.T}; wrote {path}")
    return {"alive": int(res.alive.sum()), "n_points": int(res.alive.size), "steps": res.steps,
            "state_csv": path}


def cmd_trace(cfg: RunConfig, args) -> dict:
    spec = cfg.spec()
    tr = trace(spec, cfg.T, cfg.trace_dt, cfg.trace_epsilon)
    if not tr.ok.any():
        raise NumericalFailure("no trace sample could be computed")
    path = f"{args.out}_trace.csv"
    tr.to_csv(path)
    print(f"{int(tr.ok.sum())} trace samples; wrote {path}")
    return {"samples": int(tr.ok.sum()), "failed": int((~tr.ok).sum()), "trace_csv": path}


def _driver_after(cfg: RunConfig, transforms) -> dict | None:
    """Driver parameters after the transforms when the driver family is closed under them."""
    d = cfg.driver
    if d.type not in ("brownian", "linear", "zero", "constant0"):
        return None
    kappa, mu = d.kappa if d.type == "brownian" else 0.0, d.mu
    for tr in transforms:
        k, c = tr.kind, tr.c
        if k is TransformKind.V:
            kappa, mu = kappa / (c * c), mu / c
        elif k is TransformKind.T:
            kappa, mu = kappa * c, mu * c
        elif k is TransformKind.D:
            mu += c
        elif k is TransformKind.S0:
            mu *= math.exp(c)
    return {"type": "brownian" if kappa else "linear", "kappa": kappa, "mu": mu}


def cmd_transform(cfg: RunConfig, args) -> dict:
    spec = cfg.spec()
    extra = [ElementaryTransform.parse(_parse_transform_flag(t)) for t in (args.transform or [])]
    transforms = [ElementaryTransform.parse(t) for t in cfg.transforms] + extra
    if args.normalize:
        if cfg.driver.type == "brownian":
            rec = normalize_stochastic(spec.b, spec.sigma, cfg.driver.kappa, cfg.driver.mu)
        else:
            rec = normalize(spec)
        transforms += rec.transforms
    try:
        out = apply_all(transforms, spec)
    except ConfigurationError as exc:
        raise ConfigError(f"transforms: {exc}") from None
    result = {
        "domain": cfg.domain,
        "b": list(out.b.coefficients),
        "sigma": list(out.sigma.coefficients),
        "transforms": [t.to_json() for t in transforms],
        "driver": _driver_after(cfg, transforms),
        "normalization_residuals": list(normalization_residuals(out.b.coefficients,
                                                                out.sigma.coefficients)),
    }
    out.u.to_csv(f"{args.out}_driver.csv")
    print(json.dumps(result, indent=2))
    return result


def _parse_transform_flag(text: str):
    kind, _, c = text.partition(":")
    if not c:
        raise ConfigError(f"--transform {text!r}: expected KIND:VALUE, e.g. S:0.693")
    try:
        return [kind, float(c)]
    except ValueError:
        raise ConfigError(f"--transform {text!r}: value is not a number") from None


def _target_fields(cfg: RunConfig):
    t = cfg.target or {"preset": "radial"}
    if "preset" in t:
        return preset_fields(t["preset"], CanonicalDomain.Disk)
    return (SlitField(*t["b"], domain=CanonicalDomain.Disk),
            CompleteField(*t["sigma"], domain=CanonicalDomain.Disk))


def cmd_reparam(cfg: RunConfig, args) -> dict:
    from .reparam import cross_reparam, to_radial

    spec = cfg.spec()
    radial = cfg.target is None or cfg.target.get("preset", "").lower() == "radial"
    if radial:
        r = to_radial(spec, cfg.T)
        t, lam, ut = r.times, r.lam, r.u_tilde
        extra = {"T_max": r.T_max, "truncated": r.truncated,
                 "lambda_discrepancy": r.lambda_discrepancy}
    else:
        bt, st = _target_fields(cfg)
        c = cross_reparam(spec, bt, st, cfg.T)
        t, lam, ut = c.times, c.lam, c.u_tilde
        extra = {"horizon_reached": c.horizon_reached, "stopped_at": c.stopped_at}
    path = f"{args.out}_reparam.csv"
    np.savetxt(path, np.column_stack([t, lam, ut]), delimiter=",", header="t,lambda,u_tilde",
               comments="", fmt="%.17g")
    print(f"lambda(T) = {lam[-1]:.10g}; wrote {path}")
    return {"reparam_csv": path, "lambda_T": float(lam[-1]), **extra}


def _stats_one(payload):
    cfg_dict, stream, with_probe = payload
    from .reparam import kappa_estimate, phase_probe, to_radial

    cfg = RunConfig.from_dict(cfg_dict)
    d = cfg.driver
    u = brownian_path(d.kappa, d.dt, cfg.T, RandomSeed(d.seed, stream))
    if d.mu:
        u = DrivingPath(u.times, u.values + d.mu * u.times)
    b, s = cfg.fields()
    spec = ChainSpec(b, s, u)
    out = {"stream": stream}
    try:
        r = to_radial(spec, cfg.T)
        out.update(kappa=kappa_estimate(r), truncated=r.truncated, lambda_T=float(r.lam[-1]))
    except (ExplosionError, ConfigurationError) as exc:
        out.update(kappa=None, error=str(exc))
    if with_probe:
        tr = trace(spec, cfg.T, cfg.trace_dt, cfg.trace_epsilon)
        rep = phase_probe(tr)
        out["phase"] = {"simple": rep.simple, "min_gap": rep.min_gap, "gap_ratio": rep.gap_ratio,
                        "resolution": rep.resolution, "box_dim": rep.box_dim_estimate}
    return out


def cmd_stats(cfg: RunConfig, args) -> dict:
    if cfg.driver.type != "brownian":
        raise ConfigError("field 'driver.type': stats needs a brownian driver")
    jobs = [(cfg.to_dict(), i, i == 0 and args.phase) for i in range(cfg.n_paths)]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_stats_one, jobs))
    else:
        results = [_stats_one(j) for j in jobs]
    ks = np.array([r["kappa"] for r in results if r.get("kappa") is not None])
    if ks.size == 0:
        raise NumericalFailure("no path produced a kappa estimate")
    summary = {
        "kappa_true": cfg.driver.kappa,
        "n_paths": cfg.n_paths,
        "kappa_mean": float(ks.mean()),
        "kappa_std": float(ks.std(ddof=1)) if ks.size > 1 else 0.0,
        "kappa_estimates": ks.tolist(),
        "failures": int(cfg.n_paths - ks.size),
    }
    if args.phase:
        summary["phase_probe"] = results[0].get("phase")
    print(f"kappa estimate: {summary['kappa_mean']:.4f} +- {summary['kappa_std']:.4f} "
          f"over {ks.size} paths")
    return summary


COMMANDS = {
    "fields": cmd_fields,
    "simulate": cmd_simulate,
    "trace": cmd_trace,
    "transform": cmd_transform,
    "reparam": cmd_reparam,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override driver.seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int,
                        help="worker processes (default: $SLITFLOW_THREADS or 1)")
    common.add_argument("--out", help="output prefix (default: the config's 'output')")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="slitflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"slitflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("fields", parents=[common], help="check fields, print the Herglotz form")
    sub.add_parser("simulate", parents=[common], help="simulate the stochastic flow on a grid")
    sub.add_parser("trace", parents=[common], help="compute the trace")
    t = sub.add_parser("transform", parents=[common], help="apply elementary transformations")
    t.add_argument("--transform", action="append", metavar="KIND:VALUE",
                   help="transform to append (repeatable), e.g. S:0.693")
    t.add_argument("--normalize", action="store_true", help="append the normalizing V, T, D")
    sub.add_parser("reparam", parents=[common], help="reparameterize with target fields")
    s = sub.add_parser("stats", parents=[common], help="Monte Carlo kappa estimates")
    s.add_argument("--phase", action="store_true", help="also run the phase probe on path 0")
    return p


def _threads(value) -> int:
    if value is None:
        env = os.environ.get("SLITFLOW_THREADS")
        if env:
            try:
                value = int(env)
            except ValueError:
                raise ConfigError(f"SLITFLOW_THREADS={env!r} is not an integer") from None
        else:
            value = 1
    if value < 1:
        raise ConfigError("--threads must be at least 1")
    return value


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = RunConfig.from_dict({**cfg.to_dict(),
                                       "driver": {**cfg.driver.to_dict(), "seed": args.seed}})
        args.threads = _threads(args.threads)
        args.out = args.out or cfg.output
        try:
            cfg.spec()
        except (ConfigurationError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        result = COMMANDS[args.command](cfg, args)
    except (ConfigError, ConfigurationError, OSError) as exc:
        print(f"slitflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, ExplosionError, FloatingPointError) as exc:
        print(f"slitflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write_json(f"{args.out}_summary.json",
                {"command": args.command, "config": cfg.to_dict(), "result": result})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
