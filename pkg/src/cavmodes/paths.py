"""Output file names for cavmodes commands."""

from __future__ import annotations

from pathlib import Path

EQUILIBRIUM_FILE = "equilibrium.json"
MODES_FILE = "modes.csv"
SPECTRUM_FILE = "spectrum.csv"
FORCE_CONSTANTS_FILE = "force_constants.json"
PROJECTIONS_FILE = "projections.csv"
SWEEP_FILE = "sweep.csv"
COLLECTIVE_FILE = "collective.json"
COLLECTIVE_SPECTRUM_FILE = "collective_spectrum.csv"
MODEL_COMPARE_FILE = "model_compare.json"


def output_path(out: Path, name: str) -> Path:
    """Return the path of a named output inside ``out``, creating ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    return out / name
