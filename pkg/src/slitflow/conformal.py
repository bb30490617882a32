"""Canonical domains, their fixed isomorphisms and the disk automorphism group.

Three model domains are used throughout the package:

* ``HalfPlane``  ``{Im z > 0}`` with marked boundary point ``0``,
* ``Disk``       ``{|z| < 1}`` with marked boundary point ``1``,
* ``Strip``      ``{0 < Im z < pi}`` with marked boundary point ``0``.

The fixed isomorphisms are ``phi(z) = -(z - 2i)/(z + 2i)`` from the half-plane
to the disk and ``psi(z) = Log((2 + z)/(2 - z))`` from the half-plane to the
strip.  Every other pair is reached by composition and inversion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

INFINITY = complex(np.inf, 0.0)
"""Point at infinity of the closed half-plane (only the closed-form maps accept it)."""


class DomainError(ValueError):
    """A point lies outside the domain where an operation is defined."""


class CanonicalDomain(enum.Enum):
    HalfPlane = "half-plane"
    Disk = "disk"
    Strip = "strip"

    @classmethod
    def parse(cls, name) -> "CanonicalDomain":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {
            "h": cls.HalfPlane, "half-plane": cls.HalfPlane, "halfplane": cls.HalfPlane,
            "upper-half-plane": cls.HalfPlane,
            "d": cls.Disk, "disk": cls.Disk, "disc": cls.Disk, "unit-disk": cls.Disk,
            "s": cls.Strip, "strip": cls.Strip,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown domain {name!r}") from None

    def contains(self, z, tol: float = 0.0):
        """Membership mask of the open domain, with optional slack ``tol``."""
        z = np.asarray(z, dtype=complex)
        if self is CanonicalDomain.HalfPlane:
            return z.imag > -tol
        if self is CanonicalDomain.Disk:
            return np.abs(z) < 1.0 + tol
        return (z.imag > -tol) & (z.imag < np.pi + tol)

    @property
    def marked_point(self) -> complex:
        return 1.0 + 0j if self is CanonicalDomain.Disk else 0j


# --------------------------------------------------------------------------
# Disk automorphisms


@dataclass(frozen=True)
class DiskAutomorphism:
    """The Möbius self-map ``z -> exp(i theta) (z - a) / (1 - conj(a) z)``.

    Calling the object evaluates the map without domain checks (it accepts
    numpy arrays); :func:`mobius_apply` is the checked scalar entry point.
    """

    theta: float = 0.0
    a: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "a", complex(self.a))
        if not abs(self.a) < 1.0:
            raise ValueError(f"automorphism parameter |a| = {abs(self.a)} must be < 1")

    @classmethod
    def identity(cls) -> "DiskAutomorphism":
        return cls(0.0, 0j)

    @classmethod
    def from_matrix(cls, p, q) -> "DiskAutomorphism":
        """Map ``z -> (p z + q) / (conj(q) z + conj(p))`` written in normal form."""
        p = complex(p)
        q = complex(q)
        return cls(2.0 * np.angle(p), -q / p)

    def matrix(self):
        """SU(1,1) representative ``(p, q)`` with ``|p|^2 - |q|^2 = 1``."""
        s = 1.0 / np.sqrt(1.0 - abs(self.a) ** 2)
        p = np.exp(0.5j * self.theta) * s
        return p, -self.a * p

    def __call__(self, z):
        rot = np.exp(1j * self.theta)
        return rot * (z - self.a) / (1.0 - np.conj(self.a) * z)

    def derivative(self, z):
        rot = np.exp(1j * self.theta)
        return rot * (1.0 - abs(self.a) ** 2) / (1.0 - np.conj(self.a) * z) ** 2

    def second_derivative(self, z):
        rot = np.exp(1j * self.theta)
        abar = np.conj(self.a)
        return 2.0 * abar * rot * (1.0 - abs(self.a) ** 2) / (1.0 - abar * z) ** 3

    def inverse(self) -> "DiskAutomorphism":
        rot = np.exp(1j * self.theta)
        return DiskAutomorphism(-self.theta, -self.a * rot)

    def compose(self, inner: "DiskAutomorphism") -> "DiskAutomorphism":
        """``self o inner``."""
        p1, q1 = self.matrix()
        p2, q2 = inner.matrix()
        return DiskAutomorphism.from_matrix(p1 * p2 + q1 * np.conj(q2), p1 * q2 + q1 * np.conj(p2))


def _check_disk(z, what="point"):
    if np.any(np.abs(np.asarray(z)) > 1.0 + 1e-9):
        raise DomainError(f"{what} outside the closed unit disk: {z}")


def mobius_apply(m: DiskAutomorphism, z):
    _check_disk(z)
    return m(z)


def mobius_compose(m1: DiskAutomorphism, m2: DiskAutomorphism) -> DiskAutomorphism:
    return m1.compose(m2)


def mobius_invert(m: DiskAutomorphism) -> DiskAutomorphism:
    return m.inverse()


def mobius_derivative(m: DiskAutomorphism, z):
    return m.derivative(z)


# --------------------------------------------------------------------------
# Closed-form isomorphisms between the canonical domains


def _phi(z):
    z = np.asarray(z, dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = -(z - 2j) / (z + 2j)
    return np.where(np.isinf(z), -1.0 + 0j, w)[()]


def _phi_inv(w):
    w = np.asarray(w, dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = 2j * (1.0 - w) / (1.0 + w)
    return np.where(w == -1.0, INFINITY, z)[()]


def _phi_prime(z):
    return -4j / (np.asarray(z, dtype=complex) + 2j) ** 2


def _psi(z):
    z = np.asarray(z, dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.log((2.0 + z) / (2.0 - z))
    return np.where(np.isinf(z), 1j * np.pi, w)[()]


def _psi_inv(w):
    return 2.0 * np.tanh(np.asarray(w, dtype=complex) / 2.0)


def _psi_prime(z):
    z = np.asarray(z, dtype=complex)
    return 4.0 / (4.0 - z * z)


_PRIMITIVES = {
    # name: (forward, inverse, derivative of forward)
    "phi_H_to_D": (_phi, _phi_inv, _phi_prime),
    "psi_H_to_S": (_psi, _psi_inv, _psi_prime),
}


@dataclass(frozen=True)
class _Step:
    tag: str  # "phi_H_to_D", "psi_H_to_S" or "mobius"
    inverted: bool = False
    mobius: DiskAutomorphism | None = None

    def flipped(self) -> "_Step":
        return _Step(self.tag, not self.inverted, self.mobius)

    def forward(self, z):
        if self.tag == "mobius":
            m = self.mobius.inverse() if self.inverted else self.mobius
            return m(z)
        f, finv, _ = _PRIMITIVES[self.tag]
        return finv(z) if self.inverted else f(z)

    def derivative(self, z):
        if self.tag == "mobius":
            m = self.mobius.inverse() if self.inverted else self.mobius
            return m.derivative(z)
        f, finv, df = _PRIMITIVES[self.tag]
        if self.inverted:
            return 1.0 / df(finv(z))
        return df(z)


@dataclass(frozen=True)
class ConformalMap:
    """A composition chain of closed-form conformal maps (applied left to right)."""

    steps: tuple = ()

    @classmethod
    def identity(cls) -> "ConformalMap":
        return cls(())

    @classmethod
    def mobius(cls, m: DiskAutomorphism) -> "ConformalMap":
        return cls((_Step("mobius", False, m),))

    @property
    def tag(self) -> str:
        if not self.steps:
            return "identity"
        if len(self.steps) == 1:
            s = self.steps[0]
            return s.tag + ("^-1" if s.inverted else "")
        return "composition"

    def __call__(self, z):
        return self.apply(z)

    def apply(self, z):
        for s in self.steps:
            z = s.forward(z)
        return z

    def derivative(self, z):
        d = np.ones_like(np.asarray(z, dtype=complex))
        for s in self.steps:
            d = d * s.derivative(z)
            z = s.forward(z)
        return d[()] if isinstance(d, np.ndarray) else d

    def inverse(self) -> "ConformalMap":
        return ConformalMap(tuple(s.flipped() for s in reversed(self.steps)))

    def then(self, other: "ConformalMap") -> "ConformalMap":
        """Apply ``self`` first, then ``other``."""
        return ConformalMap(self.steps + other.steps)

    def apply_inverse(self, z):
        return self.inverse().apply(z)


_PHI = ConformalMap((_Step("phi_H_to_D"),))
_PSI = ConformalMap((_Step("psi_H_to_S"),))


def _from_half_plane(target: CanonicalDomain) -> ConformalMap:
    if target is CanonicalDomain.HalfPlane:
        return ConformalMap.identity()
    return _PHI if target is CanonicalDomain.Disk else _PSI


def canonical_iso(source, target) -> ConformalMap:
    """Fixed isomorphism ``source -> target`` routed through the half-plane."""
    source = CanonicalDomain.parse(source)
    target = CanonicalDomain.parse(target)
    if source is target:
        return ConformalMap.identity()
    return _from_half_plane(source).inverse().then(_from_half_plane(target))


def to_disk(domain) -> ConformalMap:
    return canonical_iso(domain, CanonicalDomain.Disk)
