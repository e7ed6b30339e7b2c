import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavmodes.errors import UnknownUnitError
from cavmodes.units import (
    DEFAULT_UNITS,
    FrequencyUnit,
    cm1_to_hartree,
    convert_frequency,
    hartree_to_cm1,
    parse_unit,
)


def test_one_hartree_is_about_219475_wavenumbers():
    assert hartree_to_cm1(1.0) == pytest.approx(219474.6313, rel=1e-9)


def test_amu_conversion_uses_codata_masses():
    assert DEFAULT_UNITS.amu_to_electron_mass == pytest.approx(1822.888486, rel=1e-9)


@given(st.floats(min_value=1e-6, max_value=1e5, allow_nan=False))
def test_wavenumber_conversion_inverts(value: float):
    assert hartree_to_cm1(cm1_to_hartree(value)) == pytest.approx(value, rel=1e-13)


def test_convert_frequency_keeps_array_shape():
    values = np.array([[1.0, 2.0], [3.0, 4.0]])

    converted = convert_frequency(values, "ha", "cm^-1")

    assert converted.shape == (2, 2)
    np.testing.assert_allclose(converted, values * DEFAULT_UNITS.hartree_to_wavenumber)


@pytest.mark.parametrize(
    ("alias", "unit"),
    [
        ("Hartree", FrequencyUnit.HARTREE),
        (" au ", FrequencyUnit.HARTREE),
        ("cm1", FrequencyUnit.WAVENUMBER),
        ("wavenumber", FrequencyUnit.WAVENUMBER),
    ],
)
def test_parse_unit_accepts_aliases(alias: str, unit: FrequencyUnit):
    assert parse_unit(alias) is unit


def test_parse_unit_rejects_unknown_names():
    with pytest.raises(UnknownUnitError, match="eV"):
        parse_unit("eV")
