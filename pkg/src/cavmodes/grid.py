"""Tabulated-grid backend with local polynomial interpolation."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .errors import (
    ConfigError,
    DimensionMismatchError,
    OutOfHullError,
)
from .models import CoupledSystem, FloatArray
from .surface import DEFAULT_TRUST_RADIUS, CBOSurface, SurfacePoint, check_point

logger = logging.getLogger(__name__)

DEFAULT_GRID_ORDER = 3
_DIPOLE_COLUMNS = ("mu_x", "mu_y", "mu_z")


@dataclass(frozen=True, slots=True, eq=False)
class GridSurfaceSpec:
    """Tensor-product table of energies and dipoles over displacements.

    ``axes[k]`` holds the sampled displacements of generalized coordinate k
    relative to the system geometry (photon coordinates relative to zero).
    """

    axes: tuple[FloatArray, ...]
    energies: FloatArray
    dipoles: FloatArray
    order: int = DEFAULT_GRID_ORDER

    @property
    def shape(self) -> tuple[int, ...]:
        """Return the number of nodes along each axis."""
        return tuple(axis.shape[0] for axis in self.axes)


def validate_grid_spec(spec: GridSurfaceSpec, system: CoupledSystem) -> GridSurfaceSpec:
    """Check that the table covers every generalized coordinate consistently."""
    if len(spec.axes) != system.n_dof:
        raise DimensionMismatchError(
            f"grid has {len(spec.axes)} axes, system has {system.n_dof} coordinates"
        )
    if spec.order < 1:
        raise ConfigError("grid interpolation order must be at least 1")
    for index, axis in enumerate(spec.axes):
        if axis.shape[0] < 2 or np.any(np.diff(axis) <= 0):
            raise ConfigError(f"grid axis {index} must have 2+ increasing nodes")
    if spec.energies.shape != spec.shape:
        raise DimensionMismatchError(
            f"energy table has shape {spec.energies.shape}, expected {spec.shape}"
        )
    if spec.dipoles.shape != (*spec.shape, 3):
        raise DimensionMismatchError(
            f"dipole table has shape {spec.dipoles.shape}, expected {(*spec.shape, 3)}"
        )
    if not (np.all(np.isfinite(spec.energies)) and np.all(np.isfinite(spec.dipoles))):
        raise ConfigError("grid table contains non-finite values")
    return spec


def grid_from_samples(
    displacements: FloatArray,
    energies: FloatArray,
    dipoles: FloatArray,
    order: int = DEFAULT_GRID_ORDER,
) -> GridSurfaceSpec:
    """Arrange scattered samples on their tensor-product grid.

    Every combination of the distinct per-coordinate values must be present
    exactly once.
    """
    displacements = np.atleast_2d(np.asarray(displacements, dtype=float))
    axes = tuple(np.unique(column) for column in displacements.T)
    shape = tuple(axis.shape[0] for axis in axes)
    if int(np.prod(shape)) != displacements.shape[0]:
        raise ConfigError(
            f"{displacements.shape[0]} samples do not fill a {shape} tensor grid"
        )

    energy_table = np.full(shape, np.nan)
    dipole_table = np.full((*shape, 3), np.nan)
    for row, energy, dipole in zip(displacements, energies, dipoles, strict=True):
        node = tuple(
            int(np.searchsorted(axis, value))
            for axis, value in zip(axes, row, strict=True)
        )
        if not np.isnan(energy_table[node]):
            raise ConfigError(f"duplicate grid sample at displacement {row.tolist()}")
        energy_table[node] = energy
        dipole_table[node] = dipole
    return GridSurfaceSpec(
        axes=axes, energies=energy_table, dipoles=dipole_table, order=order
    )


def load_grid_csv(path: Path, order: int = DEFAULT_GRID_ORDER) -> GridSurfaceSpec:
    """Load a grid table: displacement columns, then energy, mu_x, mu_y, mu_z."""
    try:
        lines = [
            line
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.startswith("#")
        ]
    except FileNotFoundError as exc:
        raise ConfigError(f"grid file not found: {path}") from exc
    if not lines:
        raise ConfigError(f"grid file is empty: {path}")
    header, rows = lines[0], lines[1:]

    columns = [name.strip() for name in header.split(",")]
    if len(columns) < 5 or tuple(columns[-4:]) != ("energy", *_DIPOLE_COLUMNS):
        raise ConfigError(
            f"grid file {path} must end with columns energy, mu_x, mu_y, mu_z"
        )
    try:
        table = np.loadtxt(rows, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"grid file {path} is not numeric: {exc}") from exc
    if table.shape[0] == 0 or table.shape[1] != len(columns):
        raise ConfigError(
            f"grid file {path} rows do not match its {len(columns)} columns"
        )

    logger.debug("Loaded %d grid samples from %s", table.shape[0], path)
    n_coordinates = len(columns) - 4
    return grid_from_samples(
        table[:, :n_coordinates],
        table[:, n_coordinates],
        table[:, n_coordinates + 1 :],
        order=order,
    )


def _stencil(axis: FloatArray, value: float, order: int) -> slice:
    """Return the contiguous window of order+1 nodes nearest to value."""
    size = min(order + 1, axis.shape[0])
    start = int(np.searchsorted(axis, value)) - size // 2
    start = min(max(start, 0), axis.shape[0] - size)
    return slice(start, start + size)


def _weights(nodes: FloatArray, value: float) -> tuple[FloatArray, FloatArray]:
    """Return Lagrange weights and their derivatives at value."""
    interpolator = BarycentricInterpolator(nodes, np.eye(nodes.shape[0]))
    return (
        np.asarray(interpolator(value), dtype=float),
        np.asarray(interpolator.derivative(value), dtype=float),
    )


def _contract(block: FloatArray, vectors: list[FloatArray]) -> FloatArray:
    """Contract the leading axes of block with one vector each."""
    for vector in vectors:
        block = np.tensordot(vector, block, axes=(0, 0))
    return block


class GridSurface(CBOSurface):
    """CBO surface interpolated from a tabulated energy and dipole grid.

    The table carries no separate noncoupling force, so Xi and Theta cannot
    be extracted from it.
    """

    def __init__(
        self,
        spec: GridSurfaceSpec,
        system: CoupledSystem,
        trust_radius: float = DEFAULT_TRUST_RADIUS,
    ) -> None:
        super().__init__(system, trust_radius)
        self.spec = validate_grid_spec(spec, system)
        self._origin = np.concatenate([system.positions, np.zeros(system.n_photons)])

    def evaluate(self, positions: FloatArray, photon: FloatArray) -> SurfacePoint:
        """Interpolate energy, forces and dipole."""
        self._check_shapes(positions, photon)
        displacement = np.concatenate([positions, photon]) - self._origin

        windows: list[slice] = []
        values: list[FloatArray] = []
        slopes: list[FloatArray] = []
        for index, (axis, value) in enumerate(
            zip(self.spec.axes, displacement, strict=True)
        ):
            if not axis[0] <= value <= axis[-1]:
                raise OutOfHullError(
                    f"coordinate {index} displacement {value:.6g} is outside the grid "
                    f"[{axis[0]:.6g}, {axis[-1]:.6g}]"
                )
            window = _stencil(axis, value, self.spec.order)
            weight, slope = _weights(axis[window], value)
            windows.append(window)
            values.append(weight)
            slopes.append(slope)

        energy_block = self.spec.energies[tuple(windows)]
        dipole_block = self.spec.dipoles[tuple(windows)]
        gradient = np.array(
            [
                _contract(energy_block, values[:k] + [slopes[k]] + values[k + 1 :])
                for k in range(len(windows))
            ],
            dtype=float,
        )
        n_nuclear = self._system.n_nuclear
        point = SurfacePoint(
            energy=float(_contract(energy_block, values)),
            nuclear_forces=-gradient[:n_nuclear],
            photon_forces=-gradient[n_nuclear:],
            dipole=np.asarray(_contract(dipole_block, values), dtype=float),
        )
        return check_point(point)

    def with_system(self, system: CoupledSystem) -> GridSurface:
        """Rebind to a system; the tabulated photon modes cannot change."""
        same_modes = system.n_dof == self._system.n_dof and np.allclose(
            system.photon_omegas, self._system.photon_omegas
        ) and np.allclose(system.photon_lambdas, self._system.photon_lambdas)
        if not same_modes:
            raise DimensionMismatchError(
                "a grid surface is tabulated for fixed photon modes"
            )
        return GridSurface(self.spec, system, self.trust_radius)
