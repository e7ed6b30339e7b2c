"""Cavity Born-Oppenheimer energy-surface contract."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import (
    BackendError,
    BackendLacksForceSplitError,
    BackendRefusedError,
    DimensionMismatchError,
    NonFiniteValueError,
)
from .models import CoupledSystem, FloatArray

logger = logging.getLogger(__name__)

DEFAULT_TRUST_RADIUS = 1.0
_AXES = "xyz"


@dataclass(frozen=True, slots=True, eq=False)
class SurfacePoint:
    """Energy, forces and dipole at one (R, q) configuration."""

    energy: float
    nuclear_forces: FloatArray
    photon_forces: FloatArray
    dipole: FloatArray

    def gradient(self) -> FloatArray:
        """Return the generalized energy gradient (minus the forces)."""
        return -np.concatenate([self.nuclear_forces, self.photon_forces])


def coupling_force(
    system: CoupledSystem, photon: FloatArray, dipole: FloatArray
) -> FloatArray:
    """Return the explicit cavity term e Z_I sum_a lambda_a (omega_a q_a - lambda_a.mu).

    This is the part of the nuclear force that comes from the nuclear dipole
    entering the coupling operator directly.
    """
    lambdas = system.photon_lambdas
    drive = lambdas.T @ (system.photon_omegas * photon) - lambdas.T @ (lambdas @ dipole)
    return system.charge_matrix.T @ drive


class CBOSurface(ABC):
    """Ground-state CBO energy surface E(R, q) of a coupled system.

    Implementations are pure functions of the configuration: no state is kept
    between calls, so evaluations may run concurrently.
    """

    supports_force_split = False

    def __init__(
        self, system: CoupledSystem, trust_radius: float = DEFAULT_TRUST_RADIUS
    ) -> None:
        """Bind the surface to a validated system."""
        self._system = system
        self.trust_radius = trust_radius

    @property
    def system(self) -> CoupledSystem:
        """Return the bound system."""
        return self._system

    @abstractmethod
    def evaluate(self, positions: FloatArray, photon: FloatArray) -> SurfacePoint:
        """Evaluate energy, forces and dipole."""

    @abstractmethod
    def with_system(self, system: CoupledSystem) -> CBOSurface:
        """Return the same matter model bound to another photon-mode set."""

    def replicated(self, n_mol: int, spacing: float) -> CBOSurface:
        """Return a surface for n_mol non-interacting copies of the molecule."""
        raise BackendError(
            f"{type(self).__name__} cannot build a {n_mol}-molecule surface"
        )

    def noncoupling_forces(
        self, positions: FloatArray, photon: FloatArray
    ) -> FloatArray:
        """Return nuclear forces without the explicit cavity coupling term."""
        raise BackendLacksForceSplitError(
            f"{type(self).__name__} cannot separate the cavity coupling force"
        )

    def energy(self, positions: FloatArray, photon: FloatArray) -> float:
        """Return E(R, q)."""
        return self.evaluate(positions, photon).energy

    def nuclear_forces(self, positions: FloatArray, photon: FloatArray) -> FloatArray:
        """Return F_R = -dE/dR."""
        return self.evaluate(positions, photon).nuclear_forces

    def photon_forces(self, positions: FloatArray, photon: FloatArray) -> FloatArray:
        """Return F_q = -dE/dq."""
        return self.evaluate(positions, photon).photon_forces

    def dipole(self, positions: FloatArray, photon: FloatArray) -> FloatArray:
        """Return the total dipole <mu>."""
        return self.evaluate(positions, photon).dipole

    def evaluate_flat(self, flat: FloatArray) -> SurfacePoint:
        """Evaluate at a generalized configuration vector."""
        positions, photon = self._system.split(flat)
        return self.evaluate(positions, photon)

    def start_configuration(self) -> FloatArray:
        """Return the system geometry with all photon coordinates at zero."""
        return np.concatenate(
            [self._system.positions, np.zeros(self._system.n_photons)]
        )

    def _check_shapes(self, positions: FloatArray, photon: FloatArray) -> None:
        """Raise on malformed or non-finite inputs."""
        if positions.shape != (self._system.n_nuclear,) or photon.shape != (
            self._system.n_photons,
        ):
            raise DimensionMismatchError(
                f"configuration shape {positions.shape}+{photon.shape} does not match "
                f"{self._system.n_nuclear} nuclear and {self._system.n_photons} "
                "photon coordinates"
            )
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(photon))):
            raise NonFiniteValueError("configuration contains non-finite values")

    def _check_trust(self, displacement: FloatArray) -> None:
        """Refuse nuclear displacements beyond the trust radius."""
        worst = int(np.argmax(np.abs(displacement)))
        if abs(displacement[worst]) <= self.trust_radius:
            return
        atom, kappa = divmod(worst, 3)
        label = self._system.atoms[atom].label
        raise BackendRefusedError(
            f"atom {atom} ({label}) {_AXES[kappa]} is displaced "
            f"{displacement[worst]:.4f} Bohr from the reference, beyond the "
            f"{self.trust_radius:.4f} Bohr trust radius"
        )


def check_point(point: SurfacePoint) -> SurfacePoint:
    """Raise if a backend produced non-finite output."""
    values = (
        np.atleast_1d(point.energy),
        point.nuclear_forces,
        point.photon_forces,
        point.dipole,
    )
    if not all(np.all(np.isfinite(value)) for value in values):
        raise NonFiniteValueError("backend returned non-finite energy, force or dipole")
    return point
