"""Validation and transformations of coupled systems."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptySystemError,
    NonpositiveMassError,
    NonpositiveOmegaError,
    PartitionError,
    SystemValidationError,
)
from .models import Atom, CoupledSystem, IndexMap, PhotonMode

DEFAULT_MOLECULE_SPACING = 20.0


def _check_partition(partition: tuple[tuple[int, int], ...], n_atoms: int) -> None:
    """Require the partition ranges to tile [0, n_atoms) exactly once."""
    covered = np.zeros(n_atoms, dtype=int)
    for start, stop in partition:
        if not (0 <= start < stop <= n_atoms):
            raise PartitionError(
                f"molecule range [{start}, {stop}) is outside [0, {n_atoms})"
            )
        covered[start:stop] += 1

    gaps = np.flatnonzero(covered == 0)
    if gaps.size:
        raise PartitionError(f"atoms {gaps.tolist()} are not assigned to a molecule")
    overlaps = np.flatnonzero(covered > 1)
    if overlaps.size:
        raise PartitionError(
            f"atoms {overlaps.tolist()} are assigned to more than one molecule"
        )


def validate_system(system: CoupledSystem) -> CoupledSystem:
    """Validate a system and attach its index map.

    An empty partition means the whole system is one molecule.
    """
    if not system.atoms:
        raise EmptySystemError("system has no atoms")

    for index, atom in enumerate(system.atoms):
        if not atom.mass > 0:
            raise NonpositiveMassError(
                f"atom {index} ({atom.label}) has nonpositive mass {atom.mass}"
            )
        if atom.position.shape != (3,) or not np.all(np.isfinite(atom.position)):
            raise SystemValidationError(
                f"atom {index} ({atom.label}) has a non-finite or malformed position"
            )
        if not np.isfinite(atom.charge):
            raise SystemValidationError(
                f"atom {index} ({atom.label}) charge is not finite"
            )

    for alpha, mode in enumerate(system.photon_modes):
        if not mode.omega > 0:
            raise NonpositiveOmegaError(
                f"photon mode {alpha} has nonpositive frequency {mode.omega}"
            )
        if mode.lambda_vec.shape != (3,) or not np.all(np.isfinite(mode.lambda_vec)):
            raise SystemValidationError(
                f"photon mode {alpha} has a non-finite or malformed coupling vector"
            )
        if mode.polarization is not None and not np.linalg.norm(mode.polarization) > 0:
            raise SystemValidationError(f"photon mode {alpha} has a zero polarization")

    partition = system.molecule_partition or ((0, system.n_atoms),)
    _check_partition(partition, system.n_atoms)

    return replace(
        system,
        molecule_partition=tuple(sorted(partition)),
        index_map=IndexMap(n_atoms=system.n_atoms, n_photons=system.n_photons),
    )


def with_photon_modes(
    system: CoupledSystem, photon_modes: tuple[PhotonMode, ...]
) -> CoupledSystem:
    """Return the same matter coupled to a different set of photon modes."""
    return validate_system(replace(system, photon_modes=photon_modes, index_map=None))


def uncoupled(system: CoupledSystem) -> CoupledSystem:
    """Return the system with every coupling vector set to zero."""
    modes = tuple(
        PhotonMode(
            omega=mode.omega,
            lambda_vec=np.zeros(3),
            polarization=mode.direction if mode.strength > 0 else mode.polarization,
        )
        for mode in system.photon_modes
    )
    return with_photon_modes(system, modes)


def with_coupling(system: CoupledSystem, strength: float) -> CoupledSystem:
    """Return the system with |lambda_alpha| = strength along each polarization."""
    modes = []
    for alpha, mode in enumerate(system.photon_modes):
        direction = mode.direction
        if strength != 0.0 and not np.linalg.norm(direction) > 0:
            raise SystemValidationError(
                f"photon mode {alpha} has no polarization to scale a coupling along"
            )
        modes.append(
            PhotonMode(
                omega=mode.omega,
                lambda_vec=strength * direction,
                polarization=direction if np.linalg.norm(direction) > 0 else None,
            )
        )
    return with_photon_modes(system, tuple(modes))


def scale_coupling(system: CoupledSystem, factor: float) -> CoupledSystem:
    """Return the system with every coupling vector multiplied by factor."""
    modes = tuple(
        PhotonMode(
            omega=mode.omega,
            lambda_vec=factor * mode.lambda_vec,
            polarization=mode.direction if mode.strength > 0 else mode.polarization,
        )
        for mode in system.photon_modes
    )
    return with_photon_modes(system, modes)


def molecule_sizes(system: CoupledSystem) -> list[int]:
    """Return the atom count of each molecule."""
    partition = system.molecule_partition or ((0, system.n_atoms),)
    return [stop - start for start, stop in partition]


def replicate_molecules(
    system: CoupledSystem,
    n_mol: int,
    spacing: float = DEFAULT_MOLECULE_SPACING,
) -> CoupledSystem:
    """Place n_mol copies of a single-molecule system along x, spacing Bohr apart."""
    if n_mol < 1:
        raise SystemValidationError("number of molecules must be at least 1")
    if len(molecule_sizes(system)) != 1:
        raise DimensionMismatchError("replication needs a single-molecule system")

    shift = np.array([spacing, 0.0, 0.0])
    atoms: list[Atom] = []
    partition: list[tuple[int, int]] = []
    for copy_index in range(n_mol):
        start = len(atoms)
        atoms.extend(
            replace(atom, position=atom.position + copy_index * shift)
            for atom in system.atoms
        )
        partition.append((start, len(atoms)))

    return validate_system(
        CoupledSystem(
            atoms=tuple(atoms),
            photon_modes=system.photon_modes,
            molecule_partition=tuple(partition),
        )
    )
