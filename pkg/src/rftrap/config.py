"""Declarative trap configuration: TOML with ion / trap / axial sections.

Dimensioned keys carry their unit in the name (r0_mm, v0_volt, drive_mhz,
mass_u, ...) so a config file can never be misread across unit
conventions.  Validation reports the full field path of the offending
key.

Example
-------
    [ion]
    charge_e = 1
    mass_u = 40.0
    label = "Ca+"

    [trap]
    k = 4
    r0_mm = 10.0
    v0_volt = 800.0
    drive_mhz = 10.0      # Omega / 2 pi
    us_volt = 0.0

    [axial]               # optional
    vend_volt = 10.0
    kappa = 0.2
    z0_mm = 10.0

    [secular]             # optional, quadrupole only
    omega_x_mhz = 1.0     # well strength given directly
"""

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .constants import mhz_to_rad_per_s
from .model import AxialConfinement, IonSpecies, LinearTrap

__all__ = ["ConfigError", "TrapConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; message carries the field path."""


@dataclass(frozen=True)
class TrapConfig:
    """Validated configuration with SI-converted domain objects."""

    ion: IonSpecies
    trap: LinearTrap
    omega_x: Optional[float]   # explicit quadrupole well strength [rad/s]
    raw: dict
    source: str

    def require_omega_x(self) -> float:
        """Quadrupole well strength for fluid scaling, explicit or derived."""
        from .model import secular_frequencies
        if self.omega_x is not None:
            return self.omega_x
        if self.trap.k != 2:
            raise ConfigError(
                "secular.omega_x_mhz: required only for quadrupole scaling")
        return secular_frequencies(self.trap, self.ion).omega_x


def _need(table: dict, section: str, key: str, kind, source: str):
    if key not in table:
        raise ConfigError(f"{section}.{key}: missing required key ({source})")
    value = table[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(
            f"{section}.{key}: expected {kind.__name__}, got "
            f"{type(value).__name__} ({source})")
    return value


def _optional(table: dict, section: str, key: str, kind, default, source: str):
    if key not in table:
        return default
    return _need(table, section, key, kind, source)


_KNOWN = {
    "ion": {"charge_e", "mass_u", "label"},
    "trap": {"k", "r0_mm", "v0_volt", "drive_mhz", "us_volt"},
    "axial": {"vend_volt", "kappa", "z0_mm"},
    "secular": {"omega_x_mhz"},
}


def parse_config(raw: dict, source: str = "<dict>") -> TrapConfig:
    """Validate a parsed TOML mapping and build the domain objects."""
    for section in raw:
        if section not in _KNOWN:
            raise ConfigError(f"{section}: unknown section ({source})")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"{section}: expected a table ({source})")
        for key in raw[section]:
            if key not in _KNOWN[section]:
                raise ConfigError(f"{section}.{key}: unknown key ({source})")
    for section in ("ion", "trap"):
        if section not in raw:
            raise ConfigError(f"{section}: missing required section ({source})")

    ion_t = raw["ion"]
    trap_t = raw["trap"]
    try:
        ion = IonSpecies(
            charge_e=_need(ion_t, "ion", "charge_e", float, source),
            mass_u=_need(ion_t, "ion", "mass_u", float, source),
            label=_optional(ion_t, "ion", "label", str, "", source))
    except ValueError as exc:
        raise ConfigError(f"{exc} ({source})") from exc

    axial = None
    if "axial" in raw:
        ax_t = raw["axial"]
        try:
            axial = AxialConfinement.from_lab(
                vend_volt=_need(ax_t, "axial", "vend_volt", float, source),
                kappa=_need(ax_t, "axial", "kappa", float, source),
                z0_mm=_need(ax_t, "axial", "z0_mm", float, source))
        except ValueError as exc:
            raise ConfigError(f"{exc} ({source})") from exc

    try:
        trap = LinearTrap.from_lab(
            k=_need(trap_t, "trap", "k", int, source),
            r0_mm=_need(trap_t, "trap", "r0_mm", float, source),
            v0_volt=_need(trap_t, "trap", "v0_volt", float, source),
            freq_mhz=_need(trap_t, "trap", "drive_mhz", float, source),
            us_volt=_optional(trap_t, "trap", "us_volt", float, 0.0, source),
            axial=axial)
    except ValueError as exc:
        raise ConfigError(f"{exc} ({source})") from exc

    omega_x = None
    if "secular" in raw:
        f = _need(raw["secular"], "secular", "omega_x_mhz", float, source)
        if f <= 0:
            raise ConfigError(f"secular.omega_x_mhz: must be > 0 ({source})")
        if trap.k != 2:
            raise ConfigError(
                f"secular.omega_x_mhz: only meaningful for k = 2 ({source})")
        omega_x = mhz_to_rad_per_s(f)

    return TrapConfig(ion=ion, trap=trap, omega_x=omega_x, raw=raw,
                      source=source)


def load_config(path) -> TrapConfig:
    """Read and validate a TOML config file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")
    return parse_config(raw, source=str(path))
