import json
from itertools import product
from pathlib import Path

import numpy as np
import pytest
from conftest import co2_asym_omega, co2_config_data, write_config

from cavmodes.analytic import AnalyticSurface
from cavmodes.config import load_config
from cavmodes.errors import ConfigError
from cavmodes.grid import GridSurface
from cavmodes.models import RelaxationMethod
from cavmodes.units import cm1_to_hartree

ROOT = Path(__file__).resolve().parents[1]
DOCS_EXAMPLE = ROOT / "docs" / "examples" / "co2_analogue.json"

TOML_CONFIG = """format = 1

[system]
atoms = [{ label = "X", mass = 1.0, charge = 0.3, position = [0.0, 0.0, 0.0] }]

[[system.photon_modes]]
omega_cm1 = 2000.0
lambda = [0.0, 0.0, 0.05]

[backend]
kind = "polarizable"

[backend.polarizable]
force_constants = [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]]
polarizability = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]

[numerics.relaxation]
method = "scipy-bfgs"
force_tolerance = 1e-7

[sweep]
lambdas = [0.0, 0.05]
variants = ["full", "hopfield"]
"""


def _grid_csv(path: Path) -> Path:
    lines = ["# one atom and one photon mode", "x,y,z,q,energy,mu_x,mu_y,mu_z"]
    for point in product((-0.1, 0.1), repeat=4):
        energy = 0.5 * sum(value**2 for value in point)
        lines.append(",".join(f"{value}" for value in (*point, energy, 0.0, 0.0, 0.3)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _grid_config(csv_path: str) -> dict:
    data = co2_config_data()
    data["system"]["atoms"] = data["system"]["atoms"][:1]
    data["backend"] = {"kind": "grid", "grid": {"csv_path": csv_path, "order": 1}}
    return data


def test_load_json_config(tmp_path: Path):
    config = load_config(write_config(tmp_path / "run.json", co2_config_data()))

    assert config.system.n_atoms == 3
    assert config.system.photon_omegas[0] == pytest.approx(co2_asym_omega())
    assert config.backend.kind == "polarizable"
    assert config.spectrum.broadening_cm1 == 10.0
    np.testing.assert_allclose(
        config.backend.polarizable.charge_transfer, 0.2 * config.system.charge_matrix
    )
    assert isinstance(config.surface(), AnalyticSurface)


def test_load_toml_config(tmp_path: Path):
    path = tmp_path / "run.toml"
    path.write_text(TOML_CONFIG, encoding="utf-8")

    config = load_config(path)

    assert config.system.photon_omegas[0] == pytest.approx(cm1_to_hartree(2000.0))
    assert config.backend.polarizable.polarizability[2, 2] == 2.0
    assert config.relaxation.method is RelaxationMethod.SCIPY_BFGS
    assert config.relaxation.force_tolerance == 1e-7
    assert config.sweep.lambdas == (0.0, 0.05)
    assert config.sweep.variants == ("full", "hopfield")
    assert config.collective.n_mol == 1


def test_numerics_record_every_setting(tmp_path: Path):
    config = load_config(write_config(tmp_path / "run.json", co2_config_data()))

    numerics = config.numerics()

    assert numerics["spectrum"]["lorentzian"] == "area-normalized"
    assert numerics["finite_difference"]["richardson_levels"] == 2
    assert set(numerics) == {
        "backend",
        "trust_radius",
        "relaxation",
        "finite_difference",
        "spectrum",
        "sweep",
        "collective",
    }


def test_bad_sweep_entry_names_its_key_path(tmp_path: Path):
    data = co2_config_data(sweep={"lambdas": [0.0, 0.1, "strong"]})

    with pytest.raises(ConfigError, match=r"sweep\.lambdas\[2\]"):
        load_config(write_config(tmp_path / "run.json", data))


def test_bad_variant_names_its_key_path(tmp_path: Path):
    data = co2_config_data(sweep={"lambdas": [0.0], "variants": ["full", "exact"]})

    with pytest.raises(ConfigError, match=r"sweep\.variants\[1\]"):
        load_config(write_config(tmp_path / "run.json", data))


def test_bad_atom_position_names_its_key_path(tmp_path: Path):
    data = co2_config_data()
    data["system"]["atoms"][1]["position"] = [0.0, 0.0]

    with pytest.raises(ConfigError, match=r"system\.atoms\[1\]\.position"):
        load_config(write_config(tmp_path / "run.json", data))


def test_short_key_spellings_are_accepted(tmp_path: Path):
    reference = load_config(write_config(tmp_path / "long.json", co2_config_data()))
    data = co2_config_data()
    for atom in data["system"]["atoms"]:
        atom["Z"] = atom.pop("charge")
        atom["xyz"] = atom.pop("position")
    mode = data["system"]["photon_modes"][0]
    mode["lambda_xyz"] = mode.pop("lambda")

    config = load_config(write_config(tmp_path / "short.json", data))

    np.testing.assert_array_equal(config.system.charges, reference.system.charges)
    np.testing.assert_array_equal(config.system.positions, reference.system.positions)
    np.testing.assert_array_equal(
        config.system.photon_lambdas, reference.system.photon_lambdas
    )


@pytest.mark.parametrize(
    ("section", "key", "alias"),
    [("atoms", "charge", "Z"), ("atoms", "position", "xyz")],
)
def test_both_key_spellings_are_rejected(tmp_path: Path, section, key, alias):
    data = co2_config_data()
    entry = data["system"][section][0]
    entry[alias] = entry[key]

    with pytest.raises(ConfigError, match=rf"system\.{section}\[0\].*both {key}"):
        load_config(write_config(tmp_path / "run.json", data))


def test_short_lambda_key_names_its_key_path(tmp_path: Path):
    data = co2_config_data()
    mode = data["system"]["photon_modes"][0]
    mode.pop("lambda")
    mode["lambda_xyz"] = [0.0, 0.05]

    with pytest.raises(ConfigError, match=r"photon_modes\[0\]\.lambda_xyz"):
        load_config(write_config(tmp_path / "run.json", data))


@pytest.mark.parametrize(
    ("change", "message"),
    [
        ({"format": 2}, "Unsupported config format"),
        ({"backend": {"kind": "dft"}}, "backend.kind"),
        ({"collective": {"n_mol": 0}}, "at least 1"),
        ({"numerics": {"spectrum": {"broadening_cm1": "wide"}}}, "broadening_cm1"),
    ],
)
def test_invalid_sections_are_rejected(tmp_path: Path, change, message):
    data = co2_config_data(**change)

    with pytest.raises(ConfigError, match=message):
        load_config(write_config(tmp_path / "run.json", data))


def test_trust_radius_must_be_positive(tmp_path: Path):
    data = co2_config_data()
    data["backend"]["trust_radius"] = 0.0

    with pytest.raises(ConfigError, match="trust_radius"):
        load_config(write_config(tmp_path / "run.json", data))


def test_photon_frequency_needs_exactly_one_unit(tmp_path: Path):
    data = co2_config_data()
    data["system"]["photon_modes"][0]["omega_cm1"] = 2400.0

    with pytest.raises(ConfigError, match="exactly one of"):
        load_config(write_config(tmp_path / "run.json", data))


def test_charge_transfer_forms_are_exclusive(tmp_path: Path):
    data = co2_config_data()
    data["backend"]["polarizable"]["charge_transfer"] = np.zeros((3, 9)).tolist()

    with pytest.raises(ConfigError, match="not both"):
        load_config(write_config(tmp_path / "run.json", data))


def test_missing_config_file(tmp_path: Path):
    with pytest.raises(ConfigError, match="Config not found"):
        load_config(tmp_path / "missing.json")


def test_unknown_suffix_is_rejected(tmp_path: Path):
    path = tmp_path / "run.yaml"
    path.write_text("format: 1\n", encoding="utf-8")

    with pytest.raises(ConfigError, match=r"\.json or \.toml"):
        load_config(path)


def test_malformed_json_is_rejected(tmp_path: Path):
    path = tmp_path / "run.json"
    path.write_text("{ not json", encoding="utf-8")

    with pytest.raises(ConfigError, match="not valid"):
        load_config(path)


def test_grid_csv_path_is_relative_to_the_config(tmp_path: Path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    _grid_csv(data_dir / "surface.csv")
    config_dir = tmp_path / "configs"
    config_dir.mkdir()

    config = load_config(
        write_config(config_dir / "run.json", _grid_config("../data/surface.csv"))
    )

    assert config.backend.kind == "grid"
    assert config.backend.grid.order == 1
    assert isinstance(config.surface(), GridSurface)


def test_missing_grid_file_is_a_config_error(tmp_path: Path):
    data = _grid_config("absent.csv")

    with pytest.raises(ConfigError, match="csv_path"):
        load_config(write_config(tmp_path / "run.json", data))


def _sample_config(samples: list[dict]) -> dict:
    data = _grid_config("unused.csv")
    data["backend"] = {"kind": "grid", "grid": {"samples": samples, "order": 1}}
    return data


@pytest.mark.parametrize("displacement", [None, [], [[0.0, 0.0]], [0.0, "x"]])
def test_grid_sample_displacement_is_validated(tmp_path: Path, displacement):
    sample = {"energy": 0.0, "dipole": [0.0, 0.0, 0.0]}
    if displacement is not None:
        sample["displacement"] = displacement
    data = _sample_config([sample])

    with pytest.raises(ConfigError, match=r"samples\[0\]\.displacement"):
        load_config(write_config(tmp_path / "run.json", data))


def test_grid_samples_share_one_displacement_length(tmp_path: Path):
    samples = [
        {"displacement": [0.0] * 4, "energy": 0.0, "dipole": [0.0, 0.0, 0.0]},
        {"displacement": [0.1] * 3, "energy": 0.1, "dipole": [0.0, 0.0, 0.0]},
    ]

    with pytest.raises(ConfigError, match=r"samples\[1\]\.displacement"):
        load_config(write_config(tmp_path / "run.json", _sample_config(samples)))


def test_grid_contents_change_the_config_hash(tmp_path: Path):
    csv_path = _grid_csv(tmp_path / "surface.csv")
    config_path = write_config(tmp_path / "run.json", _grid_config("surface.csv"))
    before = load_config(config_path).config_hash

    csv_path.write_text(
        csv_path.read_text(encoding="utf-8").replace("0.3\n", "0.31\n"),
        encoding="utf-8",
    )

    assert load_config(config_path).config_hash != before


def test_config_hash_ignores_key_order_and_whitespace(tmp_path: Path):
    data = co2_config_data()
    compact = tmp_path / "compact.json"
    compact.write_text(json.dumps(data, separators=(",", ":")), encoding="utf-8")
    reordered = tmp_path / "reordered.json"
    reordered.write_text(
        json.dumps(dict(reversed(list(data.items()))), indent=4), encoding="utf-8"
    )

    assert load_config(compact).config_hash == load_config(reordered).config_hash


def test_config_hash_tracks_values(tmp_path: Path):
    first = load_config(write_config(tmp_path / "a.json", co2_config_data()))
    second = load_config(
        write_config(
            tmp_path / "b.json",
            co2_config_data(numerics={"spectrum": {"broadening_cm1": 5.0}}),
        )
    )

    assert first.config_hash != second.config_hash


def test_documented_example_loads():
    config = load_config(DOCS_EXAMPLE)

    assert config.system.n_atoms == 3
    assert config.sweep.lambdas
    assert config.collective.n_mol >= 1
