from __future__ import annotations

import json
from pathlib import Path

import pytest
from conftest import co2_asym_omega, co2_config_data, write_config
from typer.testing import CliRunner

from cavmodes.cli import app
from cavmodes.units import hartree_to_cm1

runner = CliRunner()


def _invoke(*args: str | Path):
    return runner.invoke(app, ["--no-color", *(str(arg) for arg in args)])


def _config(tmp_path: Path, **sections) -> Path:
    return write_config(tmp_path / "run.json", co2_config_data(**sections))


def _read_csv(path: Path) -> list[dict[str, float]]:
    lines = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if not line.startswith("#")
    ]
    header = lines[0].split(",")
    return [
        dict(zip(header, (_parse_cell(cell) for cell in line.split(",")), strict=True))
        for line in lines[1:]
    ]


def _parse_cell(cell: str) -> float | str:
    try:
        return float(cell)
    except ValueError:
        return cell


def test_relax_writes_equilibrium_and_restarts_in_place(tmp_path: Path):
    config = _config(tmp_path)
    out = tmp_path / "out"

    first = _invoke("relax", "--config", config, "--out", out)
    second = _invoke(
        "relax",
        "--config",
        config,
        "--out",
        tmp_path / "again",
        "--from-equilibrium",
        out / "equilibrium.json",
    )

    assert first.exit_code == 0, first.output
    assert "Relaxation Complete" in first.output
    assert second.exit_code == 0, second.output
    equilibrium = json.loads((tmp_path / "again" / "equilibrium.json").read_text())
    assert equilibrium["iterations"] == 0
    assert len(equilibrium["positions"]) == 9
    assert equilibrium["metadata"]["numerics"]["backend"] == "polarizable"


def test_start_outside_trust_radius_exits_with_config_code(tmp_path: Path):
    config = _config(tmp_path)
    out = tmp_path / "out"
    _invoke("relax", "--config", config, "--out", out)
    start = out / "equilibrium.json"
    data = json.loads(start.read_text())
    data["positions"][2] -= 2.0
    start.write_text(json.dumps(data), encoding="utf-8")

    result = _invoke(
        "relax", "--config", config, "--out", out, "--from-equilibrium", start
    )

    assert result.exit_code == 2
    assert "Error:" in result.output


def test_malformed_equilibrium_file_is_reported(tmp_path: Path):
    config = _config(tmp_path)
    start = tmp_path / "broken.json"
    start.write_text(json.dumps({"positions": [0.0]}), encoding="utf-8")

    result = _invoke(
        "relax",
        "--config",
        config,
        "--out",
        tmp_path / "out",
        "--from-equilibrium",
        start,
    )

    assert result.exit_code == 2
    assert "Equilibrium file" in result.output


def test_missing_config_exits_with_config_code(tmp_path: Path):
    result = _invoke("relax", "--config", tmp_path / "absent.json")

    assert result.exit_code == 2
    assert "Config not found" in result.output


def test_uncoupled_modes_are_the_bare_frequencies(tmp_path: Path):
    data = co2_config_data()
    data["system"]["photon_modes"][0]["lambda"] = [0.0, 0.0, 0.0]
    config = write_config(tmp_path / "run.json", data)
    out = tmp_path / "out"

    result = _invoke("modes", "--config", config, "--out", out)

    assert result.exit_code == 0, result.output
    rows = _read_csv(out / "modes.csv")
    assert len(rows) == 10
    expected = hartree_to_cm1(co2_asym_omega())
    matches = [row for row in rows if row["omega_cm1"] == pytest.approx(expected)]
    assert len(matches) == 2
    assert {"Zstar_x", "Zstar_y", "Zstar_z", "ir_amplitude"} <= set(rows[0])
    spectrum = (out / "spectrum.csv").read_text(encoding="utf-8").splitlines()
    assert "omega_cm1,intensity" in spectrum
    for name in ("spectrum.csv", "force_constants.json", "projections.csv"):
        assert (out / name).exists()


def test_resonant_modes_show_two_mixed_polaritons(tmp_path: Path):
    out = tmp_path / "out"

    result = _invoke("modes", "--config", _config(tmp_path), "--out", out)

    assert result.exit_code == 0, result.output
    rows = _read_csv(out / "modes.csv")
    mixed = [row for row in rows if 0.1 < row["photon_character"] < 0.9]
    assert len(mixed) == 2
    assert {row["alignment"] > 0 for row in mixed} == {True, False}
    assert sorted(row["flags"] for row in mixed) == ["", "photon-like"]
    projections = _read_csv(out / "projections.csv")
    assert sum(row["photon_0"] for row in projections) == pytest.approx(1.0)


def test_modes_outputs_are_byte_identical_across_runs(tmp_path: Path):
    config = _config(tmp_path)

    for name in ("first", "second"):
        result = _invoke("modes", "--config", config, "--out", tmp_path / name)
        assert result.exit_code == 0, result.output

    outputs = ("modes.csv", "spectrum.csv", "force_constants.json", "projections.csv")
    for output in outputs:
        first = (tmp_path / "first" / output).read_bytes()
        second = (tmp_path / "second" / output).read_bytes()
        assert first == second


def test_csv_outputs_carry_provenance(tmp_path: Path):
    out = tmp_path / "out"

    _invoke("modes", "--config", _config(tmp_path), "--out", out)

    header = (out / "spectrum.csv").read_text(encoding="utf-8").splitlines()
    assert header[0].startswith("# config_hash = ")
    assert any(line.startswith("# numerics.spectrum.lorentzian") for line in header)
    assert any(line.startswith("# tool_version = ") for line in header)


def test_sweep_splitting_grows_with_coupling(tmp_path: Path):
    config = _config(tmp_path, sweep={"lambdas": [0.0, 0.02, 0.05, 0.1]})
    out = tmp_path / "out"

    result = _invoke("sweep", "--config", config, "--out", out)

    assert result.exit_code == 0, result.output
    rows = _read_csv(out / "sweep.csv")
    assert [row["lambda"] for row in rows] == [0.0, 0.02, 0.05, 0.1]
    splittings = [row["pipeline_splitting_cm1"] for row in rows]
    assert splittings == sorted(splittings)
    assert all(row["full_splitting_cm1"] > 0 for row in rows[1:])
    assert "closed_form_splitting_cm1" in rows[0]
    assert rows[0]["unscaled_splitting_cm1"] == pytest.approx(0.0, abs=1e-6)
    assert rows[0]["lambda_eff"] == 0.0
    assert rows[0]["xi"] == pytest.approx(0.0, abs=1e-10)
    assert rows[0]["dmu_dq"] == 0.0
    assert all(abs(row["lambda_eff"]) > 0 for row in rows[1:])
    assert all(row["dmu_dq"] != 0 for row in rows[1:])
    assert all(abs(row["dmu_dn"]) > 0 for row in rows)


def test_sweep_rejects_a_malformed_coupling(tmp_path: Path):
    config = _config(tmp_path, sweep={"lambdas": [0.0, "x"]})

    result = _invoke("sweep", "--config", config, "--out", tmp_path / "out")

    assert result.exit_code == 2
    assert "sweep.lambdas[1]" in result.output


def test_sweep_needs_couplings(tmp_path: Path):
    result = _invoke("sweep", "--config", _config(tmp_path), "--out", tmp_path / "out")

    assert result.exit_code == 2
    assert "sweep.lambdas" in result.output


def test_collective_run_counts_dark_modes(tmp_path: Path):
    out = tmp_path / "out"

    result = _invoke(
        "collective", "--config", _config(tmp_path), "--out", out, "--n-mol", "4"
    )

    assert result.exit_code == 0, result.output
    report = json.loads((out / "collective.json").read_text())
    assert report["n_mol"] == 4
    assert report["dark_mode_count"] == 3
    assert report["dark_mode_count_direct"] == 3
    assert report["max_mode_freq_diff_cm1"] < 1e-3
    assert report["metadata"]["numerics"]["collective"]["n_mol"] == 4
    spectrum = _read_csv(out / "collective_spectrum.csv")
    assert "direct_intensity" in spectrum[0]


def test_collective_model_only_skips_the_direct_solve(tmp_path: Path):
    out = tmp_path / "out"

    result = _invoke(
        "collective",
        "--config",
        _config(tmp_path),
        "--out",
        out,
        "--n-mol",
        "8",
        "--model-only",
    )

    assert result.exit_code == 0, result.output
    report = json.loads((out / "collective.json").read_text())
    assert report["dark_mode_count"] == 7
    assert report["splitting_direct"] is None
    assert "direct_intensity" not in _read_csv(out / "collective_spectrum.csv")[0]


def test_model_compare_writes_every_level(tmp_path: Path):
    out = tmp_path / "out"

    result = _invoke("model-compare", "--config", _config(tmp_path), "--out", out)

    assert result.exit_code == 0, result.output
    report = json.loads((out / "model_compare.json").read_text())
    assert {"pipeline", "model-full", "model-mu2", "model-hopfield"} <= set(
        report["rows"]
    )
    assert set(report["two_mode"]) == {"full", "mu2", "hopfield"}
    assert report["maxwell_residual_max"] < 1e-6


def test_seed_is_accepted_and_quiet_hides_info_logs(tmp_path: Path):
    result = runner.invoke(
        app,
        [
            "--no-color",
            "--quiet",
            "relax",
            "--config",
            str(_config(tmp_path)),
            "--out",
            str(tmp_path / "out"),
            "--seed",
            "7",
        ],
    )

    assert result.exit_code == 0, result.output
    assert "Relaxation Complete" in result.output
