"""Data models for cavmodes.

All quantities are Hartree atomic units: Bohr, electron masses, Hartree
frequencies, elementary charges. Flat nuclear ordering is atom-major with the
Cartesian component inner (``3 * atom + kappa``); photon coordinates follow
all nuclear coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, DimensionMismatchError
from .units import DEFAULT_UNITS

FloatArray = NDArray[np.float64]


@dataclass(frozen=True, slots=True, eq=False)
class Atom:
    """One nucleus with its mass, charge and position."""

    label: str
    mass: float
    charge: float
    position: FloatArray

    @classmethod
    def from_amu(
        cls, label: str, mass_amu: float, charge: float, position: object
    ) -> Atom:
        """Build an atom from a mass given in atomic mass units."""
        return cls(
            label=label,
            mass=float(mass_amu) * DEFAULT_UNITS.amu_to_electron_mass,
            charge=float(charge),
            position=np.asarray(position, dtype=float).reshape(3),
        )


@dataclass(frozen=True, slots=True, eq=False)
class PhotonMode:
    """One cavity mode: frequency and coupling vector."""

    omega: float
    lambda_vec: FloatArray
    polarization: FloatArray | None = None

    @property
    def strength(self) -> float:
        """Return |lambda|."""
        return float(np.linalg.norm(self.lambda_vec))

    @property
    def direction(self) -> FloatArray:
        """Return the unit polarization vector.

        An explicit polarization wins; otherwise the coupling vector is
        normalized. A zero coupling without polarization has no direction.
        """
        if self.polarization is not None:
            return self.polarization / np.linalg.norm(self.polarization)
        norm = np.linalg.norm(self.lambda_vec)
        if norm == 0.0:
            return np.zeros(3)
        return self.lambda_vec / norm


@dataclass(frozen=True, slots=True)
class IndexMap:
    """Bijection between flat generalized indices and (atom, kappa) / alpha."""

    n_atoms: int
    n_photons: int

    @property
    def n_nuclear(self) -> int:
        """Return the number of nuclear coordinates."""
        return 3 * self.n_atoms

    @property
    def n_total(self) -> int:
        """Return the number of generalized coordinates."""
        return self.n_nuclear + self.n_photons

    def nuclear(self, atom: int, kappa: int) -> int:
        """Return the flat index of component kappa of atom."""
        if not (0 <= atom < self.n_atoms and 0 <= kappa < 3):
            raise IndexError(f"no nuclear coordinate ({atom}, {kappa})")
        return 3 * atom + kappa

    def pair(self, flat: int) -> tuple[int, int]:
        """Return (atom, kappa) for a flat nuclear index."""
        if not 0 <= flat < self.n_nuclear:
            raise IndexError(f"flat index {flat} is not a nuclear coordinate")
        return divmod(flat, 3)

    def photon(self, alpha: int) -> int:
        """Return the flat generalized index of photon mode alpha."""
        if not 0 <= alpha < self.n_photons:
            raise IndexError(f"no photon mode {alpha}")
        return self.n_nuclear + alpha


@dataclass(frozen=True, slots=True, eq=False)
class CoupledSystem:
    """Molecule(s) plus cavity photon modes: the full problem definition."""

    atoms: tuple[Atom, ...]
    photon_modes: tuple[PhotonMode, ...] = ()
    molecule_partition: tuple[tuple[int, int], ...] = ()
    index_map: IndexMap | None = None

    @property
    def n_atoms(self) -> int:
        """Return the number of nuclei."""
        return len(self.atoms)

    @property
    def n_photons(self) -> int:
        """Return the number of photon modes."""
        return len(self.photon_modes)

    @property
    def n_nuclear(self) -> int:
        """Return the number of nuclear coordinates (3 N_nuc)."""
        return 3 * len(self.atoms)

    @property
    def n_dof(self) -> int:
        """Return the number of generalized coordinates (3 N_nuc + N_pt)."""
        return self.n_nuclear + self.n_photons

    @property
    def positions(self) -> FloatArray:
        """Return the flat nuclear positions."""
        return np.concatenate([atom.position for atom in self.atoms])

    @property
    def charges(self) -> FloatArray:
        """Return the nuclear charges Z_I."""
        return np.array([atom.charge for atom in self.atoms])

    @property
    def nuclear_masses(self) -> FloatArray:
        """Return the nuclear masses triplicated to flat ordering."""
        return np.repeat([atom.mass for atom in self.atoms], 3)

    @property
    def generalized_masses(self) -> FloatArray:
        """Return the diagonal of M~: triplicated masses then photon ones."""
        return np.concatenate([self.nuclear_masses, np.ones(self.n_photons)])

    @property
    def photon_omegas(self) -> FloatArray:
        """Return the photon frequencies."""
        return np.array([mode.omega for mode in self.photon_modes])

    @property
    def photon_lambdas(self) -> FloatArray:
        """Return the coupling vectors stacked as an (N_pt, 3) array."""
        if not self.photon_modes:
            return np.zeros((0, 3))
        return np.stack([mode.lambda_vec for mode in self.photon_modes])

    @property
    def charge_matrix(self) -> FloatArray:
        """Return d(mu_nuc)/dR, the (3, 3 N_nuc) map of nuclear charges."""
        return np.kron(self.charges[np.newaxis, :], np.eye(3))

    def split(self, flat: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Split a generalized vector into nuclear and photon parts."""
        if flat.shape[0] != self.n_dof:
            raise DimensionMismatchError(
                f"expected {self.n_dof} generalized coordinates, got {flat.shape[0]}"
            )
        return flat[: self.n_nuclear], flat[self.n_nuclear :]


@dataclass(frozen=True, slots=True, eq=False)
class DisplacementVector:
    """Displacement of nuclei (Bohr) and photon coordinates from a reference."""

    nuclear: FloatArray
    photon: FloatArray

    @classmethod
    def from_flat(cls, flat: FloatArray, system: CoupledSystem) -> DisplacementVector:
        """Build a displacement from a generalized vector."""
        nuclear, photon = system.split(np.asarray(flat, dtype=float))
        return cls(nuclear=nuclear, photon=photon)

    def flat(self) -> FloatArray:
        """Return the generalized vector."""
        return np.concatenate([self.nuclear, self.photon])

    def check(self, system: CoupledSystem) -> None:
        """Raise if lengths do not match the system."""
        if self.nuclear.shape != (system.n_nuclear,) or self.photon.shape != (
            system.n_photons,
        ):
            raise DimensionMismatchError(
                "displacement lengths do not match the system: "
                f"{self.nuclear.shape[0]}+{self.photon.shape[0]} vs "
                f"{system.n_nuclear}+{system.n_photons}"
            )


class RelaxationMethod(StrEnum):
    """Supported relaxation algorithms."""

    QUASI_NEWTON = "quasi-newton"
    SCIPY_BFGS = "scipy-bfgs"


@dataclass(frozen=True, slots=True)
class RelaxationSettings:
    """Settings for joint nuclear/photon relaxation."""

    force_tolerance: float = 1e-8
    max_iterations: int = 200
    initial_step: float = 0.3
    method: RelaxationMethod = RelaxationMethod.QUASI_NEWTON

    def __post_init__(self) -> None:
        """Validate settings."""
        if not self.force_tolerance > 0:
            raise ConfigError("relaxation force_tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigError("relaxation max_iterations must be at least 1")
        if not self.initial_step > 0:
            raise ConfigError("relaxation initial_step must be positive")


@dataclass(frozen=True, slots=True)
class FDSettings:
    """Finite-difference settings for force-constant assembly."""

    nuclear_step: float = 1e-3
    photon_step: float = 1e-3
    richardson_levels: int = 2
    symmetrize: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        """Validate settings."""
        if not (self.nuclear_step > 0 and self.photon_step > 0):
            raise ConfigError("finite-difference steps must be positive")
        if self.richardson_levels < 1:
            raise ConfigError("richardson_levels must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")


@dataclass(frozen=True, slots=True, eq=False)
class Equilibrium:
    """Relaxed configuration with its energy."""

    positions: FloatArray
    photon: FloatArray
    energy: float
    iterations: int = 0
    max_force: float = 0.0

    def flat(self) -> FloatArray:
        """Return the generalized configuration vector."""
        return np.concatenate([self.positions, self.photon])


@dataclass(frozen=True, slots=True, eq=False)
class ForceConstantSet:
    """Generalized force-constant blocks and dipole derivatives at equilibrium."""

    c_rr: FloatArray
    c_qq: FloatArray
    c_qr: FloatArray
    dmu_dr: FloatArray
    dmu_dq: FloatArray
    equilibrium: Equilibrium
    settings: FDSettings = field(default_factory=FDSettings)
    asymmetry: dict[str, float] = field(default_factory=dict)
    error_estimate: dict[str, float] = field(default_factory=dict)

    @property
    def n_nuclear(self) -> int:
        """Return the number of nuclear coordinates."""
        return self.c_rr.shape[0]

    @property
    def n_photons(self) -> int:
        """Return the number of photon coordinates."""
        return self.c_qq.shape[0]

    @property
    def energy(self) -> float:
        """Return E_0."""
        return self.equilibrium.energy


@dataclass(frozen=True, slots=True, eq=False)
class PolaritonMode:
    """One normal mode of the coupled nuclear-photon system."""

    index: int
    eigenvalue: float
    eta_r: FloatArray
    eta_q: FloatArray
    u: FloatArray
    photon_character: float
    z_star_nuclear: FloatArray | None = None
    z_star_photon: FloatArray | None = None

    @property
    def imaginary(self) -> bool:
        """Return True for a negative squared frequency."""
        return self.eigenvalue < 0.0

    @property
    def omega(self) -> float:
        """Return |omega| in Hartree (magnitude for imaginary modes)."""
        return float(np.sqrt(abs(self.eigenvalue)))

    @property
    def z_star(self) -> FloatArray | None:
        """Return the total mode effective charge."""
        if self.z_star_nuclear is None or self.z_star_photon is None:
            return None
        return self.z_star_nuclear + self.z_star_photon

    @property
    def ir_amplitude(self) -> float:
        """Return |Z*|^2 (0 until charges are filled)."""
        total = self.z_star
        return 0.0 if total is None else float(total @ total)

    def eta(self) -> FloatArray:
        """Return the generalized eigendisplacement."""
        return np.concatenate([self.eta_r, self.eta_q])


@dataclass(frozen=True, slots=True)
class SpectrumSettings:
    """Broadening and wavenumber grid of IR spectra."""

    broadening_cm1: float = 10.0
    start_cm1: float = 0.0
    stop_cm1: float = 4000.0
    points: int = 4001

    def __post_init__(self) -> None:
        """Validate settings."""
        if self.points < 2 or not self.stop_cm1 > self.start_cm1:
            raise ConfigError("spectrum grid needs 2+ points and stop_cm1 > start_cm1")

    def grid(self) -> FloatArray:
        """Return the wavenumber grid."""
        return np.linspace(self.start_cm1, self.stop_cm1, self.points)


@dataclass(frozen=True, slots=True)
class SweepSettings:
    """Coupling strengths and model variants of a lambda sweep."""

    lambdas: tuple[float, ...] = ()
    variants: tuple[str, ...] = ("full", "mu2", "hopfield")
    vibration: int | None = None
    workers: int = 1


@dataclass(frozen=True, slots=True)
class CollectiveSettings:
    """Collective-coupling options."""

    n_mol: int = 1
    spacing_bohr: float = 20.0
    dark_threshold: float = 1e-8
    band_halfwidth_cm1: float = 50.0
    model_only: bool = False
    source: str = "split"
