"""Unit conventions: Hartree atomic units inside, cm^-1 at the boundaries."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.constants import physical_constants

from .errors import UnknownUnitError


class FrequencyUnit(StrEnum):
    """Supported frequency units."""

    HARTREE = "hartree"
    WAVENUMBER = "cm-1"


_UNIT_ALIASES = {
    "hartree": FrequencyUnit.HARTREE,
    "ha": FrequencyUnit.HARTREE,
    "au": FrequencyUnit.HARTREE,
    "cm-1": FrequencyUnit.WAVENUMBER,
    "cm^-1": FrequencyUnit.WAVENUMBER,
    "cm1": FrequencyUnit.WAVENUMBER,
    "wavenumber": FrequencyUnit.WAVENUMBER,
}


@dataclass(frozen=True, slots=True)
class UnitConventions:
    """Conversion constants fixed when a configuration is loaded."""

    hartree_to_wavenumber: float
    amu_to_electron_mass: float

    @classmethod
    def codata(cls) -> UnitConventions:
        """Return conventions built from the CODATA values shipped with scipy."""
        inverse_meter = physical_constants["hartree-inverse meter relationship"][0]
        amu = physical_constants["atomic mass constant"][0]
        electron_mass = physical_constants["electron mass"][0]
        return cls(
            hartree_to_wavenumber=inverse_meter / 100.0,
            amu_to_electron_mass=amu / electron_mass,
        )


DEFAULT_UNITS = UnitConventions.codata()


def parse_unit(unit: str | FrequencyUnit) -> FrequencyUnit:
    """Resolve a unit name or alias."""
    if isinstance(unit, FrequencyUnit):
        return unit
    resolved = _UNIT_ALIASES.get(unit.strip().casefold())
    if resolved is None:
        raise UnknownUnitError(f"Unknown frequency unit '{unit}'")
    return resolved


def convert_frequency(
    value: ArrayLike,
    from_unit: str | FrequencyUnit,
    to_unit: str | FrequencyUnit,
    units: UnitConventions = DEFAULT_UNITS,
) -> float | NDArray[np.float64]:
    """Convert a frequency (scalar or array) between hartree and cm^-1."""
    source = parse_unit(from_unit)
    target = parse_unit(to_unit)
    array = np.asarray(value, dtype=float)

    if source is target:
        converted = array.copy()
    elif source is FrequencyUnit.HARTREE:
        converted = array * units.hartree_to_wavenumber
    else:
        converted = array / units.hartree_to_wavenumber

    return float(converted) if converted.ndim == 0 else converted


def hartree_to_cm1(
    value: ArrayLike, units: UnitConventions = DEFAULT_UNITS
) -> float | NDArray[np.float64]:
    """Shorthand for hartree -> cm^-1."""
    return convert_frequency(
        value, FrequencyUnit.HARTREE, FrequencyUnit.WAVENUMBER, units
    )


def cm1_to_hartree(
    value: ArrayLike, units: UnitConventions = DEFAULT_UNITS
) -> float | NDArray[np.float64]:
    """Shorthand for cm^-1 -> hartree."""
    return convert_frequency(
        value, FrequencyUnit.WAVENUMBER, FrequencyUnit.HARTREE, units
    )
