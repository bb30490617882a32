"""Numerical toolkit for general slit Löwner chains and slit holomorphic stochastic flows."""

__version__ = "0.1.0"

from .autoflow import FixedPointError, FlowKind, flow_at, flow_class, t_sigma  # noqa: E402
from .chain import ChainSpec, ConfigurationError, ExplosionError, evolve, trace  # noqa: E402
from .conformal import CanonicalDomain, ConformalMap, DiskAutomorphism, canonical_iso  # noqa: E402
from .driving import DrivingPath, RandomSeed, brownian_path, deterministic_path  # noqa: E402
from .fields import CompleteField, Preset, SlitField, preset_fields  # noqa: E402

__all__ = [
    "CanonicalDomain", "ChainSpec", "CompleteField", "ConfigurationError", "ConformalMap",
    "DiskAutomorphism", "DrivingPath", "ExplosionError", "FixedPointError", "FlowKind", "Preset",
    "RandomSeed", "SlitField", "brownian_path", "canonical_iso", "deterministic_path", "evolve",
    "flow_at", "flow_class", "preset_fields", "t_sigma", "trace",
]
