"""Run-config loading for cavmodes (JSON or TOML)."""

from __future__ import annotations

import hashlib
import json
import logging
import tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .analytic import AnalyticSurface, PolarizableMoleculeSpec, cubic_from_entries
from .errors import ConfigError
from .grid import (
    DEFAULT_GRID_ORDER,
    GridSurface,
    GridSurfaceSpec,
    grid_from_samples,
    load_grid_csv,
)
from .models import (
    Atom,
    CollectiveSettings,
    CoupledSystem,
    FDSettings,
    FloatArray,
    PhotonMode,
    RelaxationMethod,
    RelaxationSettings,
    SpectrumSettings,
    SweepSettings,
)
from .surface import DEFAULT_TRUST_RADIUS, CBOSurface
from .system import validate_system
from .units import cm1_to_hartree

logger = logging.getLogger(__name__)

SUPPORTED_FORMAT = 1
BACKEND_KINDS = ("polarizable", "grid")
VARIANTS = ("full", "mu2", "hopfield")
COLLECTIVE_SOURCES = ("split", "pair")


@dataclass(frozen=True, slots=True, eq=False)
class BackendConfig:
    """Backend selection with its parsed parameters."""

    kind: str
    trust_radius: float
    polarizable: PolarizableMoleculeSpec | None = None
    grid: GridSurfaceSpec | None = None


@dataclass(frozen=True, slots=True, eq=False)
class RunConfig:
    """Fully validated run configuration."""

    source: Path
    config_hash: str
    system: CoupledSystem
    backend: BackendConfig
    relaxation: RelaxationSettings
    finite_difference: FDSettings
    spectrum: SpectrumSettings
    sweep: SweepSettings
    collective: CollectiveSettings

    def surface(self) -> CBOSurface:
        """Build the configured energy surface."""
        if self.backend.kind == "grid":
            return GridSurface(
                self.backend.grid, self.system, self.backend.trust_radius
            )
        return AnalyticSurface(
            self.backend.polarizable, self.system, self.backend.trust_radius
        )

    def numerics(self) -> dict[str, Any]:
        """Return every numerical setting for output metadata."""
        relaxation = self.relaxation
        fd = self.finite_difference
        return {
            "backend": self.backend.kind,
            "trust_radius": self.backend.trust_radius,
            "relaxation": {
                "force_tolerance": relaxation.force_tolerance,
                "max_iterations": relaxation.max_iterations,
                "initial_step": relaxation.initial_step,
                "method": relaxation.method.value,
            },
            "finite_difference": {
                "nuclear_step": fd.nuclear_step,
                "photon_step": fd.photon_step,
                "richardson_levels": fd.richardson_levels,
                "symmetrize": fd.symmetrize,
                "workers": fd.workers,
            },
            "spectrum": {
                "broadening_cm1": self.spectrum.broadening_cm1,
                "start_cm1": self.spectrum.start_cm1,
                "stop_cm1": self.spectrum.stop_cm1,
                "points": self.spectrum.points,
                "lorentzian": "area-normalized",
            },
            "sweep": {
                "lambdas": list(self.sweep.lambdas),
                "variants": list(self.sweep.variants),
                "vibration": self.sweep.vibration,
                "workers": self.sweep.workers,
            },
            "collective": {
                "n_mol": self.collective.n_mol,
                "spacing_bohr": self.collective.spacing_bohr,
                "dark_threshold": self.collective.dark_threshold,
                "band_halfwidth_cm1": self.collective.band_halfwidth_cm1,
                "source": self.collective.source,
            },
        }


def _key(path: str, key: str | int) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _expect_table(data: object, path: str, *, required: bool = False) -> dict[str, Any]:
    """Read a table; a missing optional table reads as empty."""
    if data is None:
        if required:
            raise ConfigError(f"Missing required key '{path}'")
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Expected '{path}' to be a table")
    return data


def _expect_number(
    data: dict[str, Any], key: str, path: str, default: float | None = None
) -> float:
    """Read a finite number."""
    value = data.get(key)
    where = _key(path, key)
    if value is None:
        if default is None:
            raise ConfigError(f"Missing required key '{where}'")
        return default
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"Expected '{where}' to be a number")
    if not np.isfinite(value):
        raise ConfigError(f"Expected '{where}' to be finite")
    return float(value)


def _expect_int(data: dict[str, Any], key: str, path: str, default: int) -> int:
    """Read an integer."""
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"Expected '{_key(path, key)}' to be an integer")
    return value


def _expect_bool(data: dict[str, Any], key: str, path: str, default: bool) -> bool:
    """Read a boolean."""
    value = data.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"Expected '{_key(path, key)}' to be true or false")
    return value


def _expect_string(
    data: dict[str, Any], key: str, path: str, choices: tuple[str, ...] | None = None
) -> str | None:
    """Read an optional string, optionally restricted to choices."""
    value = data.get(key)
    if value is None:
        return None
    where = _key(path, key)
    if not isinstance(value, str):
        raise ConfigError(f"Expected '{where}' to be a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"'{where}' must be one of {', '.join(choices)}")
    return value


def _as_array(value: object, where: str, shape: tuple[int, ...]) -> FloatArray:
    """Convert a nested list of numbers into an array of the given shape."""
    try:
        array = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Expected '{where}' to contain only numbers") from exc
    if array.shape != shape:
        raise ConfigError(
            f"Expected '{where}' to have shape {shape}, got {array.shape}"
        )
    if not np.all(np.isfinite(array)):
        raise ConfigError(f"Expected '{where}' to be finite")
    return array


def _as_vector(value: object, where: str) -> FloatArray:
    """Convert a non-empty flat list of numbers into a 1-D array."""
    if not isinstance(value, list) or not value:
        raise ConfigError(f"Expected '{where}' to be a non-empty array of numbers")
    return _as_array(value, where, (len(value),))


def _aliased(data: dict[str, Any], key: str, alias: str, path: str) -> str:
    """Return whichever spelling of a key is present; both at once is an error."""
    if key in data and alias in data:
        raise ConfigError(f"'{path}' sets both {key} and {alias}")
    return alias if alias in data else key


def _expect_list(data: dict[str, Any], key: str, path: str) -> list[Any]:
    value = data.get(key, [])
    if not isinstance(value, list):
        raise ConfigError(f"Expected '{_key(path, key)}' to be an array")
    return value


def _parse_atom(entry: object, path: str) -> Atom:
    atom = _expect_table(entry, path, required=True)
    label = _expect_string(atom, "label", path) or "X"
    charge = _aliased(atom, "charge", "Z", path)
    position = _aliased(atom, "position", "xyz", path)
    return Atom.from_amu(
        label=label,
        mass_amu=_expect_number(atom, "mass", path),
        charge=_expect_number(atom, charge, path),
        position=_as_array(atom.get(position), _key(path, position), (3,)),
    )


def _parse_photon_mode(entry: object, path: str) -> PhotonMode:
    mode = _expect_table(entry, path, required=True)
    if ("omega_cm1" in mode) == ("omega_hartree" in mode):
        raise ConfigError(f"'{path}' needs exactly one of omega_cm1, omega_hartree")
    if "omega_cm1" in mode:
        omega = float(cm1_to_hartree(_expect_number(mode, "omega_cm1", path)))
    else:
        omega = _expect_number(mode, "omega_hartree", path)

    lambda_vec = np.zeros(3)
    coupling = _aliased(mode, "lambda", "lambda_xyz", path)
    if coupling in mode:
        lambda_vec = _as_array(mode[coupling], _key(path, coupling), (3,))
    polarization = None
    if "polarization" in mode:
        polarization = _as_array(mode["polarization"], _key(path, "polarization"), (3,))
    return PhotonMode(omega=omega, lambda_vec=lambda_vec, polarization=polarization)


def _parse_system(raw: object) -> CoupledSystem:
    system = _expect_table(raw, "system", required=True)
    atoms = tuple(
        _parse_atom(entry, _key("system.atoms", index))
        for index, entry in enumerate(_expect_list(system, "atoms", "system"))
    )
    modes = tuple(
        _parse_photon_mode(entry, _key("system.photon_modes", index))
        for index, entry in enumerate(_expect_list(system, "photon_modes", "system"))
    )
    partition = []
    for index, entry in enumerate(_expect_list(system, "molecule_partition", "system")):
        where = _key("system.molecule_partition", index)
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(
                isinstance(value, int) and not isinstance(value, bool)
                for value in entry
            )
        ):
            raise ConfigError(f"Expected '{where}' to be [start, stop]")
        partition.append((entry[0], entry[1]))
    return validate_system(
        CoupledSystem(
            atoms=atoms, photon_modes=modes, molecule_partition=tuple(partition)
        )
    )


def _parse_polarizable(raw: object, system: CoupledSystem) -> PolarizableMoleculeSpec:
    path = "backend.polarizable"
    data = _expect_table(raw, path, required=True)
    n = system.n_nuclear

    polarizability = data.get("polarizability", 0.0)
    if isinstance(polarizability, int | float) and not isinstance(polarizability, bool):
        alpha = float(polarizability) * np.eye(3)
    else:
        alpha = _as_array(polarizability, _key(path, "polarizability"), (3, 3))

    if "charge_transfer" in data and "charge_transfer_scale" in data:
        raise ConfigError(
            f"'{path}' takes charge_transfer or charge_transfer_scale, not both"
        )
    if "charge_transfer" in data:
        transfer = _as_array(
            data["charge_transfer"], _key(path, "charge_transfer"), (3, n)
        )
    else:
        transfer = _expect_number(data, "charge_transfer_scale", path, 0.0) * (
            system.charge_matrix
        )

    reference = system.positions
    if "reference_geometry" in data:
        reference = _as_array(
            data["reference_geometry"], _key(path, "reference_geometry"), (n,)
        )
    static_dipole = np.zeros(3)
    if "static_dipole" in data:
        static_dipole = _as_array(
            data["static_dipole"], _key(path, "static_dipole"), (3,)
        )
    cubic = None
    if "cubic" in data:
        cubic = cubic_from_entries(_expect_list(data, "cubic", path), n)

    return PolarizableMoleculeSpec(
        reference_geometry=reference,
        force_constants=_as_array(
            data.get("force_constants"), _key(path, "force_constants"), (n, n)
        ),
        polarizability=alpha,
        charge_transfer=transfer,
        static_dipole=static_dipole,
        cubic=cubic,
    )


def _parse_grid(raw: object, base_dir: Path) -> tuple[GridSurfaceSpec, str | None]:
    """Return the grid spec and the SHA-256 of its CSV file, if any."""
    path = "backend.grid"
    data = _expect_table(raw, path, required=True)
    order = _expect_int(data, "order", path, DEFAULT_GRID_ORDER)
    csv_path = _expect_string(data, "csv_path", path)
    if csv_path is not None:
        resolved = (base_dir / csv_path).resolve()
        if not resolved.exists():
            raise ConfigError(f"'{path}.csv_path' not found: {resolved}")
        digest = hashlib.sha256(resolved.read_bytes()).hexdigest()
        return load_grid_csv(resolved, order), digest

    samples = _expect_list(data, "samples", path)
    if not samples:
        raise ConfigError(f"'{path}' needs csv_path or a non-empty samples array")
    displacements, energies, dipoles = [], [], []
    for index, entry in enumerate(samples):
        where = _key(_key(path, "samples"), index)
        sample = _expect_table(entry, where, required=True)
        displacement = _as_vector(
            sample.get("displacement"), _key(where, "displacement")
        )
        if displacements and displacement.shape != displacements[0].shape:
            raise ConfigError(
                f"Expected '{where}.displacement' to have "
                f"{displacements[0].size} entries like samples[0]"
            )
        displacements.append(displacement)
        energies.append(_expect_number(sample, "energy", where))
        dipoles.append(_as_array(sample.get("dipole"), _key(where, "dipole"), (3,)))
    spec = grid_from_samples(
        np.array(displacements), np.array(energies), np.array(dipoles), order
    )
    return spec, None


def _parse_relaxation(raw: object) -> RelaxationSettings:
    path = "numerics.relaxation"
    data = _expect_table(raw, path)
    defaults = RelaxationSettings()
    method = _expect_string(
        data, "method", path, tuple(item.value for item in RelaxationMethod)
    )
    return RelaxationSettings(
        force_tolerance=_expect_number(
            data, "force_tolerance", path, defaults.force_tolerance
        ),
        max_iterations=_expect_int(
            data, "max_iterations", path, defaults.max_iterations
        ),
        initial_step=_expect_number(data, "initial_step", path, defaults.initial_step),
        method=RelaxationMethod(method) if method else defaults.method,
    )


def _parse_finite_difference(raw: object) -> FDSettings:
    path = "numerics.finite_difference"
    data = _expect_table(raw, path)
    defaults = FDSettings()
    return FDSettings(
        nuclear_step=_expect_number(data, "nuclear_step", path, defaults.nuclear_step),
        photon_step=_expect_number(data, "photon_step", path, defaults.photon_step),
        richardson_levels=_expect_int(
            data, "richardson_levels", path, defaults.richardson_levels
        ),
        symmetrize=_expect_bool(data, "symmetrize", path, defaults.symmetrize),
        workers=_expect_int(data, "workers", path, defaults.workers),
    )


def _parse_spectrum(raw: object) -> SpectrumSettings:
    path = "numerics.spectrum"
    data = _expect_table(raw, path)
    defaults = SpectrumSettings()
    return SpectrumSettings(
        broadening_cm1=_expect_number(
            data, "broadening_cm1", path, defaults.broadening_cm1
        ),
        start_cm1=_expect_number(data, "start_cm1", path, defaults.start_cm1),
        stop_cm1=_expect_number(data, "stop_cm1", path, defaults.stop_cm1),
        points=_expect_int(data, "points", path, defaults.points),
    )


def _parse_sweep(raw: object) -> SweepSettings:
    path = "sweep"
    data = _expect_table(raw, path)
    lambdas = []
    for index, value in enumerate(_expect_list(data, "lambdas", path)):
        where = _key(_key(path, "lambdas"), index)
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ConfigError(f"Expected '{where}' to be a number")
        if not np.isfinite(value):
            raise ConfigError(f"Expected '{where}' to be finite")
        lambdas.append(float(value))

    variants = SweepSettings().variants
    if "variants" in data:
        variants = []
        for index, value in enumerate(_expect_list(data, "variants", path)):
            if value not in VARIANTS:
                raise ConfigError(
                    f"'{_key(_key(path, 'variants'), index)}' must be one of "
                    f"{', '.join(VARIANTS)}"
                )
            variants.append(value)
    vibration = data.get("vibration")
    if vibration is not None and (
        isinstance(vibration, bool) or not isinstance(vibration, int)
    ):
        raise ConfigError("Expected 'sweep.vibration' to be an integer")
    return SweepSettings(
        lambdas=tuple(lambdas),
        variants=tuple(variants),
        vibration=vibration,
        workers=_expect_int(data, "workers", path, 1),
    )


def _parse_collective(raw: object) -> CollectiveSettings:
    path = "collective"
    data = _expect_table(raw, path)
    defaults = CollectiveSettings()
    n_mol = _expect_int(data, "n_mol", path, defaults.n_mol)
    if n_mol < 1:
        raise ConfigError("'collective.n_mol' must be at least 1")
    return CollectiveSettings(
        n_mol=n_mol,
        spacing_bohr=_expect_number(data, "spacing_bohr", path, defaults.spacing_bohr),
        dark_threshold=_expect_number(
            data, "dark_threshold", path, defaults.dark_threshold
        ),
        band_halfwidth_cm1=_expect_number(
            data, "band_halfwidth_cm1", path, defaults.band_halfwidth_cm1
        ),
        model_only=_expect_bool(data, "model_only", path, defaults.model_only),
        source=(
            _expect_string(data, "source", path, COLLECTIVE_SOURCES)
            or defaults.source
        ),
    )


def _read_document(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"Config not found: {path}")
    try:
        if path.suffix == ".toml":
            with path.open("rb") as handle:
                raw = tomllib.load(handle)
        elif path.suffix == ".json":
            raw = json.loads(path.read_text(encoding="utf-8"))
        else:
            raise ConfigError(f"Config must be .json or .toml: {path}")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Config {path} is not valid: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("Config root must be a table")
    return raw


def config_hash(raw: dict[str, Any], extra: str | None = None) -> str:
    """Return the SHA-256 of the canonical JSON form of a config document."""
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canonical.encode("utf-8"))
    if extra:
        digest.update(extra.encode("utf-8"))
    return digest.hexdigest()


def load_config(path: Path) -> RunConfig:
    """Load and validate a run config."""
    raw = _read_document(path)
    version = raw.get("format")
    if version != SUPPORTED_FORMAT:
        raise ConfigError(
            f"Unsupported config format {version!r}; expected {SUPPORTED_FORMAT}"
        )

    system = _parse_system(raw.get("system"))
    backend_raw = _expect_table(raw.get("backend"), "backend", required=True)
    kind = _expect_string(backend_raw, "kind", "backend", BACKEND_KINDS)
    if kind is None:
        raise ConfigError("Missing required key 'backend.kind'")
    trust_radius = _expect_number(
        backend_raw, "trust_radius", "backend", DEFAULT_TRUST_RADIUS
    )
    if not trust_radius > 0:
        raise ConfigError("'backend.trust_radius' must be positive")

    grid_digest = None
    if kind == "grid":
        grid, grid_digest = _parse_grid(backend_raw.get("grid"), path.parent)
        backend = BackendConfig(kind=kind, trust_radius=trust_radius, grid=grid)
    else:
        backend = BackendConfig(
            kind=kind,
            trust_radius=trust_radius,
            polarizable=_parse_polarizable(backend_raw.get("polarizable"), system),
        )

    numerics = _expect_table(raw.get("numerics"), "numerics")
    loaded = RunConfig(
        source=path,
        config_hash=config_hash(raw, grid_digest),
        system=system,
        backend=backend,
        relaxation=_parse_relaxation(numerics.get("relaxation")),
        finite_difference=_parse_finite_difference(numerics.get("finite_difference")),
        spectrum=_parse_spectrum(numerics.get("spectrum")),
        sweep=_parse_sweep(raw.get("sweep")),
        collective=_parse_collective(raw.get("collective")),
    )
    logger.debug("Loaded config %s (hash %s)", path, loaded.config_hash[:12])
    return loaded
