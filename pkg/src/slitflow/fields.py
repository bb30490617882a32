"""The fields ``ell_n`` and the complete / slit fields built from them.

Coefficient records (:class:`CompleteField`, :class:`SlitField`) carry the
exact algebra; evaluation closures are obtained with ``.as_function()`` and
can be pushed forward through any :class:`~slitflow.conformal.ConformalMap`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .conformal import CanonicalDomain, ConformalMap, DiskAutomorphism, to_disk

D = CanonicalDomain.Disk
H = CanonicalDomain.HalfPlane
S = CanonicalDomain.Strip


class PoleError(ZeroDivisionError):
    """Evaluation at the marked pole of a field with a singularity."""


def _as_complex(z):
    return np.asarray(z, dtype=complex)


def _check_pole(z, pole, n):
    if n <= -2 and np.any(np.abs(z - pole) < 1e-300):
        raise PoleError(f"ell_{n} has a pole at {pole}")


def ell(n: int, domain, z):
    """Closed-form value of ``ell_n`` (``-2 <= n <= 2``) in a canonical domain."""
    if n not in (-2, -1, 0, 1, 2):
        raise ValueError(f"ell_n is only provided for |n| <= 2, got {n}")
    domain = CanonicalDomain.parse(domain)
    z = _as_complex(z)
    if domain is H:
        _check_pole(z, 0.0, n)
        return (-(z ** (n + 1)))[()]
    if domain is D:
        _check_pole(z, 1.0, n)
        k = n + 1
        return (-(2.0 ** (n - 1)) * (-1j) ** n * (z - 1.0) ** k * (z + 1.0) ** (1 - n))[()]
    _check_pole(z, 0.0, n)
    return (-(2.0 ** n) * np.sinh(z) * np.tanh(z / 2.0) ** n)[()]


def ell_prime(n: int, domain, z):
    """Complex derivative of ``ell_n``."""
    domain = CanonicalDomain.parse(domain)
    z = _as_complex(z)
    if domain is H:
        _check_pole(z, 0.0, n)
        return (-(n + 1) * z ** n)[()]
    if domain is D:
        _check_pole(z, 1.0, n)
        c = -(2.0 ** (n - 1)) * (-1j) ** n
        k = n + 1
        # d/dz (z-1)^k (z+1)^(1-n)
        d = (z - 1.0) ** (k - 1) * (z + 1.0) ** (-n) * (k * (z + 1.0) + (1 - n) * (z - 1.0))
        return (c * d)[()]
    _check_pole(z, 0.0, n)
    th = np.tanh(z / 2.0)
    sech2 = 1.0 - th * th
    d = np.cosh(z) * th ** n + np.sinh(z) * n * th ** (n - 1) * 0.5 * sech2
    return (-(2.0 ** n) * d)[()]


# --------------------------------------------------------------------------
# coefficient records


@dataclass(frozen=True)
class CompleteField:
    """``sigma_m1 ell_{-1} + sigma_0 ell_0 + sigma_1 ell_1`` on ``domain``."""

    sigma_m1: float
    sigma_0: float
    sigma_1: float
    domain: CanonicalDomain = D

    def __post_init__(self):
        for name in ("sigma_m1", "sigma_0", "sigma_1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "domain", CanonicalDomain.parse(self.domain))

    @property
    def coefficients(self) -> tuple:
        return (self.sigma_m1, self.sigma_0, self.sigma_1)

    def __call__(self, z):
        return eval_complete(self, z)

    def derivative(self, z):
        return sum(c * ell_prime(n, self.domain, z) for n, c in zip((-1, 0, 1), self.coefficients))

    def as_function(self) -> Callable:
        return lambda z: eval_complete(self, z)

    def on(self, domain) -> "CompleteField":
        return CompleteField(*self.coefficients, domain=domain)

    def scaled(self, c: float) -> "CompleteField":
        return CompleteField(*(c * x for x in self.coefficients), domain=self.domain)

    def disk_form(self) -> "CompleteDiskForm":
        return complete_to_disk_form(self)

    def alpha_beta(self) -> tuple:
        """``(alpha, beta)`` of the disk form ``alpha - i beta z - conj(alpha) z^2``."""
        f = self.disk_form()
        return complex(f.a, f.b), f.c

    def to_json(self) -> dict:
        return {"sigma": list(self.coefficients), "domain": self.domain.value}

    @classmethod
    def from_json(cls, data: dict) -> "CompleteField":
        return cls(*data["sigma"], domain=data.get("domain", "disk"))


@dataclass(frozen=True)
class SlitField:
    """``b_m2 ell_{-2} + b_m1 ell_{-1} + b_0 ell_0 + b_1 ell_1`` on ``domain``.

    Construction requires ``b_m2 > 0``.  :meth:`diagnostic` builds a record
    with ``b_m2 >= 0`` for experiments where the leading term is switched off.
    """

    b_m2: float
    b_m1: float
    b_0: float
    b_1: float
    domain: CanonicalDomain = D
    allow_complete: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("b_m2", "b_m1", "b_0", "b_1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "domain", CanonicalDomain.parse(self.domain))
        if self.allow_complete:
            if self.b_m2 < 0:
                raise ValueError("b_m2 must be nonnegative")
        elif not self.b_m2 > 0:
            raise ValueError(f"slit field needs b_m2 > 0, got {self.b_m2}")

    @classmethod
    def diagnostic(cls, b_m2, b_m1, b_0, b_1, domain=D) -> "SlitField":
        return cls(b_m2, b_m1, b_0, b_1, domain, allow_complete=True)

    @property
    def coefficients(self) -> tuple:
        return (self.b_m2, self.b_m1, self.b_0, self.b_1)

    @property
    def has_pole(self) -> bool:
        return self.b_m2 > 0

    def __call__(self, z):
        return eval_slit(self, z)

    def derivative(self, z):
        return sum(c * ell_prime(n, self.domain, z)
                   for n, c in zip((-2, -1, 0, 1), self.coefficients) if c != 0.0)

    def as_function(self) -> Callable:
        return lambda z: eval_slit(self, z)

    def on(self, domain) -> "SlitField":
        return SlitField(*self.coefficients, domain=domain, allow_complete=self.allow_complete)

    def with_coefficients(self, coeffs) -> "SlitField":
        return SlitField(*coeffs, domain=self.domain, allow_complete=self.allow_complete)

    def to_json(self) -> dict:
        return {"b": list(self.coefficients), "domain": self.domain.value}

    @classmethod
    def from_json(cls, data: dict) -> "SlitField":
        return cls(*data["b"], domain=data.get("domain", "disk"))


def eval_complete(f: CompleteField, z):
    return sum(c * ell(n, f.domain, z) for n, c in zip((-1, 0, 1), f.coefficients))


def eval_slit(f: SlitField, z):
    total = 0j
    for n, c in zip((-2, -1, 0, 1), f.coefficients):
        if c != 0.0:
            total = total + c * ell(n, f.domain, z)
    if np.ndim(z) and np.ndim(total) == 0:
        total = np.full(np.shape(z), total)
    return total


# --------------------------------------------------------------------------
# disk representations


@dataclass(frozen=True)
class CompleteDiskForm:
    """The polynomial ``(a + ib) - i c z + (-a + ib) z^2``."""

    a: float
    b: float
    c: float

    def __call__(self, z):
        z = _as_complex(z)
        return (complex(self.a, self.b) - 1j * self.c * z + complex(-self.a, self.b) * z * z)[()]


def complete_to_disk_form(f: CompleteField) -> CompleteDiskForm:
    s_m1, s0, s1 = f.coefficients
    return CompleteDiskForm(s0 / 2.0, s1 - s_m1 / 4.0, 2.0 * s1 + s_m1 / 2.0)


def disk_form_to_complete(form: CompleteDiskForm, domain=D) -> CompleteField:
    a, b, c = form.a, form.b, form.c
    return CompleteField(-2.0 * b + c, 2.0 * a, 0.25 * (2.0 * b + c), domain=domain)


@dataclass(frozen=True)
class HerglotzSlitForm:
    """``alpha - z (i beta + gamma (z0 + z)/(z0 - z)) - conj(alpha) z^2``."""

    alpha: complex
    beta: float
    gamma: float
    z0: complex = 1.0 + 0j

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "z0", complex(self.z0))
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if abs(abs(self.z0) - 1.0) > 1e-9:
            raise ValueError("the pole of a Herglotz slit form lies on the unit circle")

    def __call__(self, z):
        z = _as_complex(z)
        a = self.alpha
        v = a - z * (1j * self.beta + self.gamma * (self.z0 + z) / (self.z0 - z)) - np.conj(a) * z * z
        return v[()]

    def derivative(self, z):
        z = _as_complex(z)
        z0 = self.z0
        # d/dz [z (z0+z)/(z0-z)] = (z0^2 + 2 z0 z - z^2) / (z0 - z)^2
        d = -1j * self.beta - self.gamma * (z0 * z0 + 2 * z0 * z - z * z) / (z0 - z) ** 2
        return (d - 2.0 * np.conj(self.alpha) * z)[()]


def slit_to_herglotz(f: SlitField) -> HerglotzSlitForm:
    b_m2, b_m1, b0, b1 = f.coefficients
    gamma = b_m2 / 2.0
    alpha = complex(b0 / 2.0 - gamma / 4.0, b1 - b_m1 / 4.0)
    return HerglotzSlitForm(alpha, b_m1 / 2.0 + 2.0 * b1, gamma, 1.0)


def herglotz_to_slit(h: HerglotzSlitForm, domain=D) -> SlitField:
    if abs(h.z0 - 1.0) > 1e-12:
        raise ValueError("rotate the pole to 1 with mobius_transform_slit first")
    if not h.gamma > 0:
        raise ValueError("a slit field needs gamma > 0")
    a = h.alpha
    return SlitField(2.0 * h.gamma, h.beta - 2.0 * a.imag, h.gamma / 2.0 + 2.0 * a.real,
                     0.25 * (h.beta + 2.0 * a.imag), domain=domain)


def mobius_transform_slit(h: HerglotzSlitForm, m: DiskAutomorphism) -> HerglotzSlitForm:
    """Herglotz form of the pushforward ``m_* h``.

    The constant term is ``exp(i theta) V(a)/(1 - |a|^2)`` and the new weight
    is ``gamma |m'(z0)|^2``.  The rotation part ``beta`` is read off from the
    derivative of the pushforward at the origin, which equals
    ``V'(a) + m''(a) V(a)/m'(a)`` and has real part ``-gamma_new``.
    """
    a = m.a
    va = h(a)
    dm = m.derivative(a)
    alpha = dm * va  # equals exp(i theta) V(a) / (1 - |a|^2)
    slope = h.derivative(a) + m.second_derivative(a) * va / dm
    gamma = h.gamma * abs(m.derivative(h.z0)) ** 2
    z0 = complex(m(h.z0))
    z0 /= abs(z0)
    return HerglotzSlitForm(alpha, -slope.imag, gamma, z0)


def printed_beta_transform(h: HerglotzSlitForm, m: DiskAutomorphism) -> float:
    """Rotation coefficient of ``m_* h`` by the closed expression (pole at 1 only).

    Kept as an independent route for tests; :func:`mobius_transform_slit`
    does not use it.
    """
    a = m.a
    z0 = h.z0
    r2 = abs(a) ** 2
    d4 = abs(a - z0) ** 4
    im = (a * np.conj(z0)).imag
    re = (a * np.conj(z0)).real
    val = (4.0 * (a * np.conj(h.alpha)).imag + h.beta * (1.0 + r2)
           + 4.0 * h.gamma * im * (-(1.0 + r2) / d4 * re + (1.0 + r2 * r2) / d4))
    return val / (1.0 - r2)


# --------------------------------------------------------------------------
# pushforwards and diagnostics


def pushforward(V: Callable, m) -> Callable:
    """``(m_* V)(z) = m'(m^{-1}(z)) V(m^{-1}(z))`` for a conformal map ``m``."""
    if isinstance(m, DiskAutomorphism):
        m = ConformalMap.mobius(m)
    inv = m.inverse()

    def pushed(z):
        w = inv.apply(z)
        return m.derivative(w) * V(w)

    return pushed


def field_in_disk(f) -> Callable:
    """Evaluation closure of a field record transported to the disk."""
    if f.domain is D:
        return f.as_function()
    return pushforward(f.as_function(), to_disk(f.domain))


class SemicompleteReport(NamedTuple):
    ok: bool
    min_re_q: float


def semicomplete_check(V: Callable, n_angles: int = 64, n_radii: int = 32,
                       r_max: float = 0.999, tol: float = 1e-9) -> SemicompleteReport:
    """Sampled positivity test of ``Re q`` for ``V(z) = V(0) - z q(z) - conj(V(0)) z^2``."""
    v0 = complex(V(0j))
    h = 1e-5
    dv0 = (complex(V(h)) - complex(V(-h))) / (2 * h)
    radii = np.linspace(r_max / n_radii, r_max, n_radii)
    angles = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    z = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
    q = (v0 - _as_complex(V(z))) / z - np.conj(v0) * z
    worst = min(float(np.min(q.real)), -dv0.real)
    return SemicompleteReport(bool(worst >= -tol), worst)


def complete_conversions(f):
    """Convert a :class:`CompleteField` to its disk form or back."""
    if isinstance(f, CompleteField):
        return complete_to_disk_form(f)
    if isinstance(f, CompleteDiskForm):
        return disk_form_to_complete(f)
    raise TypeError(f"cannot convert {type(f).__name__}")


# --------------------------------------------------------------------------
# presets


class Preset(enum.Enum):
    Chordal = "chordal"
    Radial = "radial"
    Dipolar = "dipolar"
    ABP = "abp"
    RadialB_ChordalSigma = "radial-b-chordal-sigma"

    @classmethod
    def parse(cls, name) -> "Preset":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for p in cls:
            if key in (p.value, p.name.lower()):
                return p
        if key in ("example2", "example-2"):
            return cls.RadialB_ChordalSigma
        raise ValueError(f"unknown preset {name!r}")


_PRESETS = {
    Preset.Chordal: ((2.0, 0.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
    Preset.Radial: ((2.0, 0.0, 0.5, 0.0), (1.0, 0.0, 0.25)),
    Preset.Dipolar: ((2.0, 0.0, -0.5, 0.0), (1.0, 0.0, -0.25)),
    Preset.ABP: ((2.0, 0.0, 0.0, 0.0), (1.0, 0.0, 0.25)),
    Preset.RadialB_ChordalSigma: ((2.0, 0.0, 0.5, 0.0), (1.0, 0.0, 0.0)),
}

DEFAULT_PRESET_DOMAIN = {
    Preset.Chordal: H,
    Preset.Radial: D,
    Preset.Dipolar: S,
    Preset.ABP: D,
    Preset.RadialB_ChordalSigma: D,
}


def preset_fields(preset, domain=None) -> tuple:
    """``(SlitField, CompleteField)`` of a named preset on ``domain``."""
    preset = Preset.parse(preset)
    domain = DEFAULT_PRESET_DOMAIN[preset] if domain is None else CanonicalDomain.parse(domain)
    b, s = _PRESETS[preset]
    return SlitField(*b, domain=domain), CompleteField(*s, domain=domain)
