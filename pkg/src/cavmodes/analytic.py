"""Closed-form polarizable-molecule backend.

The molecule is a set of point charges with harmonic (optionally cubic)
nuclear springs, a linear charge-transfer dipole and an electronic dipole p
with polarizability alpha_e. The CBO ground state minimizes the cavity
Hamiltonian over p in closed form, so energies, forces and dipoles are exact
and independently checkable.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import block_diag

from .errors import (
    ConfigError,
    DimensionMismatchError,
    SingularElectronicProblemError,
)
from .models import CoupledSystem, FloatArray
from .surface import DEFAULT_TRUST_RADIUS, CBOSurface, SurfacePoint, check_point
from .system import DEFAULT_MOLECULE_SPACING, replicate_molecules

logger = logging.getLogger(__name__)

_SYMMETRY_TOLERANCE = 1e-12
_MAX_CONDITION = 1e12


@dataclass(frozen=True, slots=True, eq=False)
class PolarizableMoleculeSpec:
    """Parameters of the analytic molecule model."""

    reference_geometry: FloatArray
    force_constants: FloatArray
    polarizability: FloatArray
    charge_transfer: FloatArray
    static_dipole: FloatArray
    cubic: FloatArray | None = None

    @property
    def n_nuclear(self) -> int:
        """Return the number of nuclear coordinates the spec describes."""
        return self.reference_geometry.shape[0]


def cubic_from_entries(entries: list[list[float]], n_nuclear: int) -> FloatArray:
    """Build a fully symmetric cubic tensor from sparse [i, j, k, value] rows."""
    tensor = np.zeros((n_nuclear, n_nuclear, n_nuclear))
    for row_index, entry in enumerate(entries):
        if len(entry) != 4:
            raise ConfigError(f"cubic entry {row_index} must be [i, j, k, value]")
        i, j, k = (int(value) for value in entry[:3])
        if not all(0 <= index < n_nuclear for index in (i, j, k)):
            raise ConfigError(
                f"cubic entry {row_index} index out of range "
                f"for {n_nuclear} coordinates"
            )
        for a, b, c in itertools.permutations((i, j, k)):
            tensor[a, b, c] = float(entry[3])
    return tensor


def validate_polarizable_spec(
    spec: PolarizableMoleculeSpec, system: CoupledSystem
) -> PolarizableMoleculeSpec:
    """Check shapes, symmetry and positive semi-definiteness."""
    n = system.n_nuclear
    expected = {
        "reference_geometry": ((n,), spec.reference_geometry),
        "force_constants": ((n, n), spec.force_constants),
        "polarizability": ((3, 3), spec.polarizability),
        "charge_transfer": ((3, n), spec.charge_transfer),
        "static_dipole": ((3,), spec.static_dipole),
    }
    for name, (shape, value) in expected.items():
        if value.shape != shape:
            raise DimensionMismatchError(
                f"{name} has shape {value.shape}, expected {shape}"
            )
        if not np.all(np.isfinite(value)):
            raise ConfigError(f"{name} contains non-finite values")
    if spec.cubic is not None and spec.cubic.shape != (n, n, n):
        raise DimensionMismatchError(
            f"cubic tensor has shape {spec.cubic.shape}, expected {(n, n, n)}"
        )

    for name, matrix in (
        ("force_constants", spec.force_constants),
        ("polarizability", spec.polarizability),
    ):
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if np.max(np.abs(matrix - matrix.T)) > _SYMMETRY_TOLERANCE * scale:
            raise ConfigError(f"{name} must be symmetric")

    if np.min(np.linalg.eigvalsh(spec.polarizability)) < -_SYMMETRY_TOLERANCE:
        raise ConfigError("polarizability must be positive semi-definite")
    return spec


class AnalyticSurface(CBOSurface):
    """CBO surface of a polarizable point-charge molecule, solved in closed form."""

    supports_force_split = True

    def __init__(
        self,
        spec: PolarizableMoleculeSpec,
        system: CoupledSystem,
        trust_radius: float = DEFAULT_TRUST_RADIUS,
    ) -> None:
        super().__init__(system, trust_radius)
        self.spec = validate_polarizable_spec(spec, system)

        self._lambdas = system.photon_lambdas
        self._omegas = system.photon_omegas
        self._coupling = self._lambdas.T @ self._lambdas
        self._jacobian = system.charge_matrix + spec.charge_transfer

        electronic = np.eye(3) + spec.polarizability @ self._coupling
        if np.linalg.cond(electronic) > _MAX_CONDITION:
            raise SingularElectronicProblemError(
                "alpha_e^-1 + sum lambda lambda^T is singular for this coupling"
            )
        response = np.linalg.solve(electronic, spec.polarizability)
        self._response = 0.5 * (response + response.T)

    def _dipole_parts(
        self, positions: FloatArray, photon: FloatArray
    ) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
        """Return (displacement, fixed dipole, photon drive, electronic residual)."""
        displacement = positions - self.spec.reference_geometry
        fixed = (
            self._system.charge_matrix @ positions
            + self.spec.static_dipole
            + self.spec.charge_transfer @ displacement
        )
        drive = self._lambdas.T @ (self._omegas * photon)
        residual = drive - self._coupling @ fixed
        return displacement, fixed, drive, residual

    def _nuclear_potential(self, displacement: FloatArray) -> tuple[float, FloatArray]:
        """Return the nuclear potential and its gradient."""
        hooke = self.spec.force_constants @ displacement
        energy = 0.5 * float(displacement @ hooke)
        gradient = hooke
        if self.spec.cubic is not None:
            quadratic = np.einsum(
                "ijk,j,k->i", self.spec.cubic, displacement, displacement
            )
            energy += float(displacement @ quadratic) / 6.0
            gradient = gradient + 0.5 * quadratic
        return energy, gradient

    def evaluate(self, positions: FloatArray, photon: FloatArray) -> SurfacePoint:
        """Evaluate the exact CBO energy, forces and total dipole."""
        self._check_shapes(positions, photon)
        displacement, fixed, drive, residual = self._dipole_parts(positions, photon)
        self._check_trust(displacement)

        electronic = self._response @ residual
        dipole = fixed + electronic
        potential, potential_gradient = self._nuclear_potential(displacement)

        energy = (
            potential
            + 0.5 * float(np.sum(self._omegas**2 * photon**2))
            - float(drive @ fixed)
            + 0.5 * float(fixed @ self._coupling @ fixed)
            - 0.5 * float(residual @ electronic)
        )
        field = drive - self._coupling @ dipole
        point = SurfacePoint(
            energy=energy,
            nuclear_forces=-potential_gradient + self._jacobian.T @ field,
            photon_forces=-(self._omegas**2) * photon
            + self._omegas * (self._lambdas @ dipole),
            dipole=dipole,
        )
        return check_point(point)

    def noncoupling_forces(
        self, positions: FloatArray, photon: FloatArray
    ) -> FloatArray:
        """Return F_R minus the explicit e Z_I lambda (omega q - lambda.mu) term."""
        self._check_shapes(positions, photon)
        displacement, fixed, drive, residual = self._dipole_parts(positions, photon)
        self._check_trust(displacement)
        dipole = fixed + self._response @ residual
        _, potential_gradient = self._nuclear_potential(displacement)
        field = drive - self._coupling @ dipole
        return -potential_gradient + self.spec.charge_transfer.T @ field

    def exact_force_constants(
        self, positions: FloatArray, photon: FloatArray
    ) -> dict[str, FloatArray]:
        """Return analytic C blocks and dipole derivatives at a configuration.

        Keys: ``c_rr``, ``c_qq``, ``c_qr``, ``dmu_dr``, ``dmu_dq``.
        """
        self._check_shapes(positions, photon)
        displacement = positions - self.spec.reference_geometry
        screening = np.eye(3) - self._response @ self._coupling
        dmu_dr = screening @ self._jacobian
        dmu_dq = self._response @ self._lambdas.T @ np.diag(self._omegas)

        c_rr = self.spec.force_constants + self._jacobian.T @ self._coupling @ dmu_dr
        if self.spec.cubic is not None:
            c_rr = c_rr + np.einsum("ijk,k->ij", self.spec.cubic, displacement)
        weighted = np.diag(self._omegas) @ self._lambdas
        return {
            "c_rr": 0.5 * (c_rr + c_rr.T),
            "c_qq": np.diag(self._omegas**2) - weighted @ dmu_dq,
            "c_qr": -weighted @ dmu_dr,
            "dmu_dr": dmu_dr,
            "dmu_dq": dmu_dq,
        }

    def with_system(self, system: CoupledSystem) -> AnalyticSurface:
        """Rebind the same molecule to a new photon-mode set."""
        if system.n_nuclear != self._system.n_nuclear:
            raise DimensionMismatchError(
                "with_system needs the same nuclei: "
                f"{system.n_nuclear} vs {self._system.n_nuclear} coordinates"
            )
        return AnalyticSurface(self.spec, system, self.trust_radius)

    def replicated(
        self, n_mol: int, spacing: float = DEFAULT_MOLECULE_SPACING
    ) -> AnalyticSurface:
        """Return the surface of n_mol non-interacting copies along x."""
        system = replicate_molecules(self._system, n_mol, spacing)
        spec = replicate_polarizable_spec(self.spec, n_mol, spacing)
        return AnalyticSurface(spec, system, self.trust_radius)


def replicate_polarizable_spec(
    spec: PolarizableMoleculeSpec,
    n_mol: int,
    spacing: float = DEFAULT_MOLECULE_SPACING,
) -> PolarizableMoleculeSpec:
    """Combine n_mol copies of one molecule into a single analytic spec.

    Copies share one electronic dipole with polarizability n_mol * alpha_e and
    no nuclear cross terms. The bright combination of n_mol molecules at
    coupling lambda then behaves exactly as one molecule at sqrt(n_mol) lambda.
    """
    n = spec.n_nuclear
    shifts = np.concatenate(
        [
            np.tile([copy_index * spacing, 0.0, 0.0], n // 3)
            for copy_index in range(n_mol)
        ]
    )
    cubic = None
    if spec.cubic is not None:
        cubic = np.zeros((n_mol * n,) * 3)
        for copy_index in range(n_mol):
            block = slice(copy_index * n, (copy_index + 1) * n)
            cubic[block, block, block] = spec.cubic
    return replace(
        spec,
        reference_geometry=np.tile(spec.reference_geometry, n_mol) + shifts,
        force_constants=block_diag(*([spec.force_constants] * n_mol)),
        polarizability=n_mol * spec.polarizability,
        charge_transfer=np.hstack([spec.charge_transfer] * n_mol),
        static_dipole=n_mol * spec.static_dipole,
        cubic=cubic,
    )
