"""Physical constants (CODATA 2018) and lab-unit conversion factors.

All internal computation is SI.  Constructors and the config loader accept
lab units (MHz, volts, millimetres, atomic mass units, elementary charges)
and convert once at the boundary.
"""

import math

# CODATA 2018, 10 significant digits.  e and k_B are exact in the 2019 SI.
EPSILON_0 = 8.854187813e-12   # vacuum permittivity [F/m]
K_B = 1.380649e-23            # Boltzmann constant [J/K]
E_CHARGE = 1.602176634e-19    # elementary charge [C]
ATOMIC_MASS = 1.660539067e-27  # atomic mass unit [kg]

TWO_PI = 2.0 * math.pi


def mhz_to_rad_per_s(f_mhz: float) -> float:
    """Drive or secular frequency, MHz -> angular frequency in rad/s."""
    return TWO_PI * 1e6 * f_mhz


def rad_per_s_to_mhz(omega: float) -> float:
    return omega / (TWO_PI * 1e6)


def mm_to_m(x_mm: float) -> float:
    return 1e-3 * x_mm


def per_mm_to_per_m(n_per_mm: float) -> float:
    """Linear ion density, ions/mm -> ions/m."""
    return 1e3 * n_per_mm
