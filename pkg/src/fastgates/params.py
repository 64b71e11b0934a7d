"""Physical constants, trap-array configuration and dimensionless gate parameters.

Everything downstream works with a handful of dimensionless numbers derived
from the trap geometry:

* ``alpha = e^2/(4 pi eps0 M)`` -- Coulomb coupling scale of the ion species,
* ``xi = d^3 omega^2 / alpha`` -- trap stiffness relative to the Coulomb
  interaction between neighbouring microtraps,
* ``chi = sqrt(1 + 4/xi) - 1`` -- fractional splitting between the two-ion
  stretch and common modes,
* ``eta = dk * sqrt(hbar / (2 M omega))`` -- Lamb-Dicke parameter for the
  momentum transfer ``dk`` of one counter-propagating pi-pulse pair.

Units are SI throughout; trap frequencies are angular (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# CODATA 2018
ELEMENTARY_CHARGE = 1.602176634e-19  # C
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
REDUCED_PLANCK = 1.054571817e-34  # J s
ATOMIC_MASS = 1.66053906660e-27  # kg

#: Default laser wavelength for the counter-propagating pulse pairs (m).
#: A pair transfers momentum 2*hbar*k, so dk = 2 * (2 pi / wavelength).
DEFAULT_WAVELENGTH = 729e-9


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class IonSpecies:
    """An ion species, identified by name and mass in kilograms."""

    name: str
    mass: float

    def __post_init__(self):
        _require_positive("mass", self.mass)


#: Singly charged calcium-40, mass taken as 40 u.
CA40 = IonSpecies(name="Ca40", mass=6.642e-26)

SPECIES = {"Ca40": CA40}


@dataclass(frozen=True)
class TrapArrayConfig:
    """Physical description of a 1D chain of identical microtraps.

    Parameters
    ----------
    ion_count : int
        Number of traps (one ion each), at least 2.
    spacing : float
        Distance d between neighbouring trap minima (m).
    trap_frequency : float
        Angular trap frequency omega of each microtrap (rad/s).
    species : IonSpecies
        The trapped ion species.
    effective_wavenumber : float
        Momentum transfer dk per pulse pair (rad/m). Defaults to two photon
        recoils at ``DEFAULT_WAVELENGTH``.
    """

    ion_count: int
    spacing: float
    trap_frequency: float
    species: IonSpecies = CA40
    effective_wavenumber: float = 2 * (2 * math.pi / DEFAULT_WAVELENGTH)

    def __post_init__(self):
        if int(self.ion_count) != self.ion_count or self.ion_count < 2:
            raise ValueError(f"ion_count must be an integer >= 2, got {self.ion_count!r}")
        _require_positive("spacing", self.spacing)
        _require_positive("trap_frequency", self.trap_frequency)
        _require_positive("effective_wavenumber", self.effective_wavenumber)

    @property
    def trap_period(self) -> float:
        """Trap period 2 pi / omega (s), the natural time unit."""
        return 2 * math.pi / self.trap_frequency


@dataclass(frozen=True)
class DerivedParams:
    """Dimensionless parameters derived from a :class:`TrapArrayConfig`."""

    alpha: float  # m^3/s^2
    xi: float
    chi: float
    eta: float


def chi_from_xi(xi: float) -> float:
    """Fractional stretch-mode splitting chi = sqrt(1 + 4/xi) - 1.

    Follows from the quadratic expansion of the Coulomb interaction of two
    ions held in separate traps at distance d; agrees with the weak-coupling
    asymptote 2/xi to first order.
    """
    xi = float(xi)
    if not math.isfinite(xi) or xi <= 0.0:
        raise ValueError(f"xi must be positive and finite, got {xi!r}")
    # expm1/log1p form keeps full precision for xi >> 1 where chi ~ 2/xi
    return math.expm1(0.5 * math.log1p(4.0 / xi))


def derive_params(config: TrapArrayConfig) -> DerivedParams:
    """Compute alpha, xi, chi and eta for a trap-array configuration."""
    m = config.species.mass
    alpha = ELEMENTARY_CHARGE**2 / (4 * math.pi * VACUUM_PERMITTIVITY) / m
    xi = config.spacing**3 * config.trap_frequency**2 / alpha
    eta = config.effective_wavenumber * math.sqrt(
        REDUCED_PLANCK / (2 * m * config.trap_frequency)
    )
    return DerivedParams(alpha=alpha, xi=xi, chi=chi_from_xi(xi), eta=eta)
