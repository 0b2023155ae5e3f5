"""Physical parameters, momenta with fixed branch conventions, and energy zones.

Natural units (hbar = c = 1) are used throughout. ``kinetic`` always means
E_k = E - m. Every momentum is either real and >= 0 or purely imaginary with
a positive imaginary part, so an evanescent wave ``exp(i p x)`` decays to the
right.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateMomentum

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ParticleSpec:
    mass: float = 1.0

    def __post_init__(self):
        if not (self.mass >= 0.0 and math.isfinite(self.mass)):
            raise ConfigError(f"mass must be finite and >= 0, got {self.mass!r}", field="m")

    @property
    def compton_wavelength(self) -> float:
        if self.mass == 0.0:
            raise ConfigError("Compton wavelength is undefined for a massless particle", field="m")
        return TWO_PI / self.mass

    def lengths(self, n_wavelengths: float) -> float:
        """Convert a length given in Compton wavelengths to natural units."""
        return n_wavelengths * self.compton_wavelength


@dataclass(frozen=True)
class DoubleBarrierSpec:
    """Two identical square barriers on [0, a] and [a + d, 2a + d].

    ``v0 > 0`` is a barrier, ``v0 < 0`` a well. ``smoothing_eps`` only enters
    the smooth potential used by the time-dependent solver.
    """

    v0: float
    width_a: float
    separation_d: float = 0.0
    smoothing_eps: float = 10.0

    def __post_init__(self):
        if not math.isfinite(self.v0):
            raise ConfigError("v0 must be finite", field="v0")
        if not self.width_a > 0.0:
            raise ConfigError(f"barrier width must be > 0, got {self.width_a!r}", field="a")
        if not self.separation_d >= 0.0:
            raise ConfigError(f"separation must be >= 0, got {self.separation_d!r}", field="d")
        if not self.smoothing_eps > 0.0:
            raise ConfigError(f"smoothing must be > 0, got {self.smoothing_eps!r}", field="eps")

    @property
    def extent(self) -> float:
        return 2.0 * self.width_a + self.separation_d

    def interfaces(self) -> tuple[float, float, float, float]:
        a, d = self.width_a, self.separation_d
        return (0.0, a, a + d, 2.0 * a + d)

    def with_v0(self, v0: float) -> "DoubleBarrierSpec":
        return dataclasses.replace(self, v0=float(v0))


class Zone(str, enum.Enum):
    ABOVE_BARRIER = "AboveBarrier"
    NORMAL_TUNNELING = "NormalTunneling"
    KLEIN = "KleinZone"
    BOUND_WINDOW = "BoundWindow"
    OTHER = "Other"


def branch_sqrt(sq):
    """Square root on the fixed branch: real >= 0, or i*|.|^(1/2) for negative input."""
    sq = np.asarray(sq, dtype=float)
    root = np.sqrt(np.abs(sq))
    return np.where(sq >= 0.0, root + 0j, 1j * root)


def momentum_squares(mass, v0, kinetic):
    """Return (k^2, p^2) in factored form, accurate near the zone edges."""
    kinetic = np.asarray(kinetic, dtype=float)
    k2 = kinetic * (kinetic + 2.0 * mass)
    shifted = kinetic - v0
    p2 = shifted * (shifted + 2.0 * mass)
    return k2, p2


def momenta(particle: ParticleSpec, v0, kinetic):
    """Free-region momentum k and potential-region momentum p.

    Works elementwise on arrays; scalars come back as 0-d complex values.
    """
    k2, p2 = momentum_squares(particle.mass, v0, kinetic)
    return branch_sqrt(k2)[()], branch_sqrt(p2)[()]


def _matching_ratio(mass, v0, kinetic, k, p):
    energy = np.asarray(kinetic, dtype=float) + mass
    return (energy + mass - v0) / (energy + mass) * k / p


def gamma(particle: ParticleSpec, v0, kinetic):
    """Ratio of lower spinor components across an interface.

    For a massless particle this is exactly 1, the sign-equivalent
    representative of (E - V)/|E - V| under (gamma, p) -> (-gamma, -p).
    """
    k, p = momenta(particle, v0, kinetic)
    if np.any(p == 0):
        raise DegenerateMomentum(f"p = 0 at v0={v0!r}, kinetic={kinetic!r}")
    energy = np.asarray(kinetic, dtype=float) + particle.mass
    if np.any(energy + particle.mass == 0):
        raise DegenerateMomentum("E + m = 0: matching ratio undefined")
    if particle.mass == 0.0:
        return np.ones_like(k)[()]
    return _matching_ratio(particle.mass, v0, kinetic, k, p)[()]


@dataclass(frozen=True)
class Kinematics:
    energy_total: float
    kinetic: float
    k: complex
    p: complex
    gamma: complex | None
    zone: Zone


def kinematics(particle: ParticleSpec, v0: float, kinetic: float) -> Kinematics:
    k, p = momenta(particle, v0, kinetic)
    try:
        g = complex(gamma(particle, v0, kinetic))
    except DegenerateMomentum:
        g = None
    return Kinematics(
        energy_total=kinetic + particle.mass,
        kinetic=float(kinetic),
        k=complex(k),
        p=complex(p),
        gamma=g,
        zone=classify_zone(particle, v0, kinetic),
    )


def classify_zone(particle: ParticleSpec, v0: float, kinetic: float) -> Zone:
    """Energy-zone label following the realness pattern of k and p.

    Points exactly on a zone edge go to the adjacent propagating zone:
    E_k = V0 is above-barrier, E_k = V0 - 2m is Klein, E_k = 0 is scattering.
    """
    m = particle.mass
    ek = float(kinetic)
    if ek >= 0.0:
        if ek >= v0:
            return Zone.ABOVE_BARRIER
        if ek <= v0 - 2.0 * m:
            return Zone.KLEIN
        return Zone.NORMAL_TUNNELING
    # bound-state side: k is imaginary only for -2m < E_k < 0
    if v0 < 0.0 and ek > -2.0 * m and ek > v0:
        return Zone.BOUND_WINDOW
    return Zone.OTHER


def bound_window(particle: ParticleSpec, v0: float) -> tuple[float, float] | None:
    """Open E_k interval where k is imaginary and p is real, or None."""
    if v0 >= 0.0:
        return None
    return (max(v0, -2.0 * particle.mass), 0.0)


def zone_interval(particle: ParticleSpec, v0: float, zone: Zone, ek_max: float) -> tuple[float, float] | None:
    """E_k interval (lo, hi) of a scattering zone at fixed v0, clipped to (0, ek_max]."""
    m = particle.mass
    if zone is Zone.ABOVE_BARRIER:
        lo, hi = max(v0, 0.0), ek_max
    elif zone is Zone.NORMAL_TUNNELING:
        lo, hi = max(v0 - 2.0 * m, 0.0), min(v0, ek_max)
    elif zone is Zone.KLEIN:
        lo, hi = 0.0, min(v0 - 2.0 * m, ek_max)
    else:
        raise ValueError(f"{zone} is not a scattering zone")
    if hi <= lo:
        return None
    return lo, hi


def _sinhc(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    return np.where(x == 0.0, 1.0, np.sinh(safe) / safe)


def trig_pair(sq, length):
    """(cos(s L), sin(s L)/s) for s = sqrt(sq) on either branch, regular at s = 0.

    For negative ``sq`` these become (cosh(q L), sinh(q L)/q). Both are even
    in s, hence analytic in ``sq`` and free of the 1/s pole.
    """
    sq = np.asarray(sq, dtype=float)
    x = np.sqrt(np.abs(sq)) * length
    pos = sq >= 0.0
    c = np.where(pos, np.cos(x), np.cosh(np.where(pos, 0.0, x)))
    s = length * np.where(pos, np.sinc(x / np.pi), _sinhc(np.where(pos, 0.0, x)))
    return c, s
