"""Domain types and closed-form relations for ideal linear 2k-pole RF traps.

A trap with 2k rod electrodes at inscribed radius r0 is driven with the
voltage difference V(t) = U_s - V0 cos(Omega t) between neighbouring rods.
The transverse RF potential of the ideal geometry is

    Phi(r, theta, t) = Phi0(t) (r/r0)^k cos(k theta),   Phi0 = -V(t)/2,

and the slow (secular) motion of an ion of charge q and mass m is governed
by the effective potential

    V*(r, theta, z) = q^2 V0^2 / (32 Ek) (r/r0)^(2k-2)
                      + q U_s / 2 (r/r0)^k cos(k theta)
                      + q kappa V_end (2 z^2 - r^2) / (2 z0^2),

with the characteristic energy Ek = m Omega^2 r0^2 / (2 k^2).  Everything
here is a pure function of immutable value types; all quantities are SI.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

from .constants import (ATOMIC_MASS, E_CHARGE, EPSILON_0, K_B, TWO_PI,
                        mhz_to_rad_per_s, mm_to_m)
from .mathieu import UnstablePointError, beta_from_aq

__all__ = [
    "IonSpecies", "AxialConfinement", "LinearTrap", "CharacteristicEnergy",
    "SecularFrequencies", "MathieuPoint", "QuadrupoleOnlyError",
    "DeconfinedError", "characteristic_energy", "mathieu_parameters",
    "secular_frequencies", "pseudopotential", "pseudopotential_force",
    "rf_field_amplitude", "rf_minimum_radius", "adiabaticity",
    "limit_density", "debye_length", "coupling_parameter", "coupling_limit",
    "quadrupole_voltage_for_omega_x",
]


class QuadrupoleOnlyError(ValueError):
    """Operation defined only for k = 2."""


class DeconfinedError(ValueError):
    """Axial deconfinement exceeds the transverse pseudopotential."""


@dataclass(frozen=True)
class IonSpecies:
    """Trapped particle: charge in elementary charges, mass in u."""

    charge_e: float
    mass_u: float
    label: str = ""

    def __post_init__(self):
        if self.charge_e == 0:
            raise ValueError("ion.charge_e: must be nonzero")
        if self.mass_u <= 0:
            raise ValueError("ion.mass_u: must be > 0")

    @property
    def charge(self) -> float:
        """Charge in coulombs."""
        return self.charge_e * E_CHARGE

    @property
    def mass(self) -> float:
        """Mass in kilograms."""
        return self.mass_u * ATOMIC_MASS


def calcium() -> IonSpecies:
    """Ca+ with the nominal 40 u isotope mass."""
    return IonSpecies(charge_e=1.0, mass_u=40.0, label="Ca+")


@dataclass(frozen=True)
class AxialConfinement:
    """Static end-electrode confinement q*kappa*V_end*(2z^2 - r^2)/(2 z0^2)."""

    vend: float    # end electrode voltage [V]
    kappa: float   # geometric loss factor, 0 < kappa <= 1
    z0: float      # axial length scale [m]

    def __post_init__(self):
        if self.vend < 0:
            raise ValueError("axial.vend: must be >= 0")
        if not 0.0 < self.kappa <= 1.0:
            raise ValueError("axial.kappa: must be in (0, 1]")
        if self.z0 <= 0:
            raise ValueError("axial.z0: must be > 0")

    @classmethod
    def from_lab(cls, vend_volt: float, kappa: float, z0_mm: float) -> "AxialConfinement":
        return cls(vend=vend_volt, kappa=kappa, z0=mm_to_m(z0_mm))


@dataclass(frozen=True)
class LinearTrap:
    """Linear 2k-pole trap (k electrode pairs)."""

    k: int          # pole-pair count; k = 2 is the quadrupole
    r0: float       # rod inscribed radius [m]
    v0: float       # RF amplitude [V]
    omega: float    # RF angular frequency [rad/s]
    us: float = 0.0  # static rod offset [V]
    axial: Optional[AxialConfinement] = None

    def __post_init__(self):
        if self.k < 2 or int(self.k) != self.k:
            raise ValueError("trap.k: must be an integer >= 2")
        if self.r0 <= 0:
            raise ValueError("trap.r0: must be > 0")
        if self.omega <= 0:
            raise ValueError("trap.omega: must be > 0")
        if self.v0 < 0:
            raise ValueError("trap.v0: must be >= 0")

    @classmethod
    def from_lab(cls, k: int, r0_mm: float, v0_volt: float, freq_mhz: float,
                 us_volt: float = 0.0,
                 axial: Optional[AxialConfinement] = None) -> "LinearTrap":
        """Build from lab units (mm, V, drive frequency Omega/2pi in MHz)."""
        return cls(k=k, r0=mm_to_m(r0_mm), v0=v0_volt,
                   omega=mhz_to_rad_per_s(freq_mhz), us=us_volt, axial=axial)

    @property
    def rf_period(self) -> float:
        return TWO_PI / self.omega


@dataclass(frozen=True)
class CharacteristicEnergy:
    """Ek = m Omega^2 r0^2 / (2 k^2), the trap's natural energy scale."""

    joules: float

    def __post_init__(self):
        if self.joules <= 0:
            raise ValueError("characteristic energy must be > 0")

    def __float__(self) -> float:
        return self.joules


@dataclass(frozen=True)
class SecularFrequencies:
    """Transverse and axial secular frequencies [rad/s].

    omega_x is the transverse frequency of the RF pseudopotential alone;
    omega_r includes the deconfining pull of the axial electrodes,
    omega_r^2 = omega_x^2 - omega_z^2 / 2.
    """

    omega_x: float
    omega_z: float = 0.0

    def __post_init__(self):
        if self.omega_x <= 0:
            raise ValueError("omega_x must be > 0")
        if self.omega_x ** 2 - 0.5 * self.omega_z ** 2 <= 0:
            raise DeconfinedError(
                "deconfined: omega_x^2 - omega_z^2/2 <= 0 "
                f"(omega_x={self.omega_x:.4g}, omega_z={self.omega_z:.4g})")

    @property
    def omega_r(self) -> float:
        return math.sqrt(self.omega_x ** 2 - 0.5 * self.omega_z ** 2)


@dataclass(frozen=True)
class MathieuPoint:
    """Dimensionless drive parameters of a quadrupole operating point."""

    a_x: float
    q_x: float

    @property
    def a_y(self) -> float:
        return -self.a_x

    @property
    def q_y(self) -> float:
        return -self.q_x

    @property
    def beta_x(self) -> float:
        return beta_from_aq(self.a_x, self.q_x)

    @property
    def beta_y(self) -> float:
        return beta_from_aq(self.a_y, self.q_y)

    def is_stable(self) -> bool:
        try:
            return 0.0 <= self.beta_x <= 1.0 and 0.0 <= self.beta_y <= 1.0
        except UnstablePointError:
            return False


# --- closed-form operations -------------------------------------------------

def characteristic_energy(trap: LinearTrap, ion: IonSpecies) -> CharacteristicEnergy:
    """Ek = m Omega^2 r0^2 / (2 k^2) in joules."""
    return CharacteristicEnergy(
        ion.mass * trap.omega ** 2 * trap.r0 ** 2 / (2.0 * trap.k ** 2))


def mathieu_parameters(trap: LinearTrap, ion: IonSpecies) -> MathieuPoint:
    """(a_u, q_u) of the quadrupole equations of motion.

    q_x = 2 q V0 / (m Omega^2 r0^2),  a_x = -4 q U_s / (m Omega^2 r0^2),
    with the y-axis values sign-flipped.
    """
    if trap.k != 2:
        raise QuadrupoleOnlyError(
            f"mathieu_parameters: quadrupole-only (got k={trap.k})")
    denom = ion.mass * trap.omega ** 2 * trap.r0 ** 2
    return MathieuPoint(a_x=-4.0 * ion.charge * trap.us / denom,
                        q_x=2.0 * ion.charge * trap.v0 / denom)


def secular_frequencies(trap: LinearTrap, ion: IonSpecies) -> SecularFrequencies:
    """omega_x = beta_x Omega / 2 and the axial/radial pair for k = 2.

    omega_z^2 = 2 q kappa V_end / (m z0^2) from the static end-electrode
    term; raises DeconfinedError when the axial pull removes the radial
    well (omega_r^2 <= 0).
    """
    if trap.k != 2:
        raise QuadrupoleOnlyError(
            f"secular_frequencies: quadrupole-only (got k={trap.k})")
    point = mathieu_parameters(trap, ion)
    omega_x = point.beta_x * trap.omega / 2.0
    omega_z = 0.0
    if trap.axial is not None and trap.axial.vend > 0:
        omega_z = math.sqrt(2.0 * abs(ion.charge) * trap.axial.kappa
                            * trap.axial.vend / (ion.mass * trap.axial.z0 ** 2))
    return SecularFrequencies(omega_x=omega_x, omega_z=omega_z)


def pseudopotential(trap: LinearTrap, ion: IonSpecies, r: float,
                    theta: float = 0.0, z: float = 0.0) -> float:
    """Effective (secular) potential energy V*(r, theta, z) in joules."""
    if r < 0:
        raise ValueError("r must be >= 0")
    ek = float(characteristic_energy(trap, ion))
    x = r / trap.r0
    v = ion.charge ** 2 * trap.v0 ** 2 / (32.0 * ek) * x ** (2 * trap.k - 2)
    if trap.us != 0.0:
        v += ion.charge * trap.us / 2.0 * x ** trap.k * math.cos(trap.k * theta)
    if trap.axial is not None:
        ax = trap.axial
        v += ion.charge * ax.kappa * ax.vend * (2.0 * z ** 2 - r ** 2) / (2.0 * ax.z0 ** 2)
    return v


def pseudopotential_force(trap: LinearTrap, ion: IonSpecies,
                          x: float, y: float, z: float = 0.0):
    """Analytic -grad V* as (Fx, Fy, Fz) in newtons."""
    ek = float(characteristic_energy(trap, ion))
    k = trap.k
    r0 = trap.r0
    r2 = x * x + y * y
    # RF term: c * (r/r0)^(2k-2); grad = c (2k-2) r^(2k-4) (x, y) / r0^(2k-2)
    c = ion.charge ** 2 * trap.v0 ** 2 / (32.0 * ek)
    pref = c * (2 * k - 2) * r2 ** (k - 2) / r0 ** (2 * k - 2)
    fx = -pref * x
    fy = -pref * y
    fz = 0.0
    if trap.us != 0.0:
        # q Us/2 Re[(w/r0)^k]; grad of Re w^k = k (Re w^(k-1), -Im w^(k-1))
        w = complex(x, y) ** (k - 1)
        s = ion.charge * trap.us * k / (2.0 * r0 ** k)
        fx -= s * w.real
        fy -= -s * w.imag
    if trap.axial is not None:
        ax = trap.axial
        s = ion.charge * ax.kappa * ax.vend / ax.z0 ** 2
        fx += s * x
        fy += s * y
        fz -= 2.0 * s * z
    return fx, fy, fz


def rf_field_amplitude(trap: LinearTrap, x: float, y: float):
    """Amplitude vector (E0x, E0y) of the oscillating field at (x, y).

    The RF part of the rod potential is -(V0/2) cos(Omega t) (r/r0)^k cos(k theta)
    on the electrode lobe at theta = 0, so the field oscillates as
    E(t) = E0 cos(Omega t) with |E0| = (V0/2) k r^(k-1) / r0^k.
    """
    k = trap.k
    w = complex(x, y) ** (k - 1)
    s = trap.v0 * k / (2.0 * trap.r0 ** k)
    return -s * w.real, s * w.imag


def rf_minimum_radius(trap: LinearTrap, ion: IonSpecies) -> float:
    """Radius where the axial pull shifts the pseudopotential minimum.

    r_min^(2k-4) = (r0^(2k-2) / z0^2) * 16 Ek kappa V_end / ((k-1) q V0^2).
    For the quadrupole the transverse well stays quadratic and the minimum
    never shifts: returns 0.0.
    """
    if trap.k == 2:
        return 0.0  # no shift: quadratic well only softens
    if trap.axial is None or trap.axial.vend == 0.0:
        return 0.0
    if trap.v0 == 0.0:
        raise ValueError("rf_minimum_radius: V0 = 0 leaves no RF well")
    ek = float(characteristic_energy(trap, ion))
    ax = trap.axial
    rhs = (trap.r0 ** (2 * trap.k - 2) / ax.z0 ** 2
           * 16.0 * ek * ax.kappa * ax.vend
           / ((trap.k - 1) * abs(ion.charge) * trap.v0 ** 2))
    return rhs ** (1.0 / (2 * trap.k - 4))


def adiabaticity(trap: LinearTrap, ion: IonSpecies, r: float) -> float:
    """Adiabaticity parameter eta(r) = k(k-1) q V0 r^(k-2) / (m Omega^2 r0^k).

    Uniform (and equal to |q_x|) in a quadrupole; grows as r^(k-2)
    otherwise.  The pseudopotential picture needs eta below ~0.3.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    k = trap.k
    return (k * (k - 1) * abs(ion.charge) * trap.v0 * r ** (k - 2)
            / (ion.mass * trap.omega ** 2 * trap.r0 ** k))


def limit_density(ion: IonSpecies, omega_x: float) -> float:
    """Space-charge density ceiling n_c = 2 m eps0 omega_x^2 / q^2 [m^-3].

    The highest density a harmonic transverse well of secular frequency
    omega_x can hold: at n_c the mean-field repulsion exactly cancels the
    confinement.
    """
    if omega_x <= 0:
        raise ValueError("omega_x must be > 0")
    return 2.0 * ion.mass * EPSILON_0 * omega_x ** 2 / ion.charge ** 2


def debye_length(ion: IonSpecies, temperature: float, density: float) -> float:
    """lambda_D = sqrt(k_B T eps0 / (q^2 n)) in metres."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    if density <= 0:
        raise ValueError("density must be > 0")
    return math.sqrt(K_B * temperature * EPSILON_0 / (ion.charge ** 2 * density))


def coupling_parameter(ion: IonSpecies, temperature: float, density: float) -> float:
    """Coulomb coupling Gamma = q^2 / (4 pi eps0 a k_B T), 4 pi n a^3 / 3 = 1.

    Gamma >~ 150-200 marks the liquid-to-crystal transition of a trapped
    one-component plasma.
    """
    if temperature <= 0 or density <= 0:
        raise ValueError("temperature and density must be > 0")
    a_ws = (3.0 / (4.0 * math.pi * density)) ** (1.0 / 3.0)
    return ion.charge ** 2 / (4.0 * math.pi * EPSILON_0 * a_ws * K_B * temperature)


def coupling_limit(ion: IonSpecies, omega_x: float, temperature: float) -> float:
    """Ceiling of the coupling parameter at the limit density,

    Gamma_c = (q^2 / 4 pi eps0)^(2/3) (2 m omega_x^2)^(1/3) / (k_B T).
    """
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    if omega_x <= 0:
        raise ValueError("omega_x must be > 0")
    return ((ion.charge ** 2 / (4.0 * math.pi * EPSILON_0)) ** (2.0 / 3.0)
            * (2.0 * ion.mass * omega_x ** 2) ** (1.0 / 3.0)
            / (K_B * temperature))


def quadrupole_voltage_for_omega_x(ion: IonSpecies, omega_x: float,
                                   omega: float, r0: float,
                                   tol: float = 1e-12) -> float:
    """RF amplitude V0 that gives a quadrupole secular frequency omega_x.

    Inverts beta(0, q_x) = 2 omega_x / Omega by Newton steps on the
    continued-fraction beta, seeded with the adiabatic-limit estimate
    q_x = sqrt(2) * 2 omega_x / Omega.
    """
    beta_target = 2.0 * omega_x / omega
    if not 0.0 < beta_target < 1.0:
        raise ValueError("omega_x must satisfy 0 < 2 omega_x / Omega < 1")
    q = math.sqrt(2.0) * beta_target
    for _ in range(100):
        f = beta_from_aq(0.0, q) - beta_target
        if abs(f) < tol:
            break
        h = max(1e-7, 1e-7 * q)
        df = (beta_from_aq(0.0, q + h) - beta_from_aq(0.0, q - h)) / (2.0 * h)
        q -= f / df
    return q * ion.mass * omega ** 2 * r0 ** 2 / (2.0 * abs(ion.charge))
