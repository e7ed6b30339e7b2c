import json
from pathlib import Path

import numpy as np
import pytest

from cavmodes.outputs import metadata, read_json, to_jsonable, write_csv, write_json
from cavmodes.paths import MODES_FILE, output_path


def _provenance() -> dict:
    return metadata("abc123", {"spectrum": {"broadening_cm1": 10.0, "points": 4001}})


def test_csv_cells_use_fixed_formats(tmp_path: Path):
    path = write_csv(
        tmp_path / "table.csv",
        ["mode", "frequency_cm1", "imaginary"],
        [[0, 2349.5, False], [np.int64(1), np.float64(-12.25), np.True_]],
        _provenance(),
    )

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# config_hash = abc123"
    assert "# numerics.spectrum.broadening_cm1 = 10.0" in lines
    assert lines[-3] == "mode,frequency_cm1,imaginary"
    assert lines[-2] == "0,2.349500000000e+03,0"
    assert lines[-1] == "1,-1.225000000000e+01,1"


def test_csv_rows_must_match_columns(tmp_path: Path):
    with pytest.raises(ValueError, match="expected 2"):
        write_csv(tmp_path / "table.csv", ["a", "b"], [[1.0]], _provenance())


def test_json_is_sorted_and_carries_metadata(tmp_path: Path):
    path = write_json(
        tmp_path / "result.json",
        {"zeta": np.array([1.0, 2.0]), "alpha": np.float64(0.5)},
        _provenance(),
    )

    text = path.read_text(encoding="utf-8")
    data = read_json(path)
    assert text.index('"alpha"') < text.index('"zeta"')
    assert data["zeta"] == [1.0, 2.0]
    assert data["metadata"]["config_hash"] == "abc123"
    assert "tool_version" in data["metadata"]


def test_to_jsonable_converts_nested_numpy_values():
    value = to_jsonable({"a": (np.int32(2), [np.float32(0.5)]), 3: np.eye(2)})

    expected = {"a": [2, [0.5]], "3": [[1.0, 0.0], [0.0, 1.0]]}
    assert json.loads(json.dumps(value)) == expected


def test_output_path_creates_the_directory(tmp_path: Path):
    target = output_path(tmp_path / "nested" / "out", MODES_FILE)

    assert target.parent.is_dir()
    assert target.name == "modes.csv"
