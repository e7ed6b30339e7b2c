"""Deterministic CSV and JSON writers.

Every file carries the tool version, the config hash and the numerics that
produced it. Nothing time-dependent is written, so identical configs give
byte-identical files.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Sequence
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def tool_version() -> str:
    """Return the installed cavmodes version."""
    try:
        return version("cavmodes")
    except PackageNotFoundError:
        return "0+unknown"


def metadata(config_hash: str, numerics: dict[str, Any]) -> dict[str, Any]:
    """Return the provenance block embedded in every output."""
    return {
        "tool_version": tool_version(),
        "config_hash": config_hash,
        "numerics": numerics,
    }


def to_jsonable(value: Any) -> Any:
    """Convert numpy values and containers into plain JSON types."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(item) for item in value]
    return value


def _flatten(prefix: str, value: Any) -> Iterable[tuple[str, Any]]:
    if isinstance(value, dict):
        for key in sorted(value):
            yield from _flatten(f"{prefix}.{key}" if prefix else str(key), value[key])
    else:
        yield prefix, value


def _cell(value: Any) -> str:
    if isinstance(value, bool | np.bool_):
        return "1" if value else "0"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return FLOAT_FORMAT % float(value)
    return str(value)


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    provenance: dict[str, Any],
) -> Path:
    """Write a CSV with '#' provenance lines above the column header."""
    lines = [f"# {key} = {value}" for key, value in _flatten("", provenance)]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        lines.append(",".join(_cell(value) for value in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("Wrote %s", path)
    return path


def write_json(path: Path, payload: dict[str, Any], provenance: dict[str, Any]) -> Path:
    """Write a JSON document with sorted keys and a ``metadata`` block."""
    document = {**to_jsonable(payload), "metadata": to_jsonable(provenance)}
    path.write_text(
        json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    logger.debug("Wrote %s", path)
    return path


def read_json(path: Path) -> dict[str, Any]:
    """Read a JSON document written by :func:`write_json`."""
    return json.loads(path.read_text(encoding="utf-8"))
