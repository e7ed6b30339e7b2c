"""Vibro-polariton normal modes, effective charges and IR spectra."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid
from scipy.stats import cauchy

from .errors import (
    DimensionMismatchError,
    EigenSolverFailureError,
    MissingDipoleDerivativesError,
    NonpositiveBroadeningError,
    NonSymmetricInputError,
)
from .hessian import generalized_force_constant_matrix
from .models import CoupledSystem, FloatArray, ForceConstantSet, PolaritonMode
from .units import cm1_to_hartree, hartree_to_cm1

logger = logging.getLogger(__name__)

DEFAULT_BROADENING_CM1 = 10.0
DEFAULT_GRID_CM1 = (0.0, 4000.0, 4001)
_SYMMETRY_TOLERANCE = 1e-9
_SIGN_TOLERANCE = 1e-12


def fix_signs(vectors: FloatArray, n_nuclear: int) -> FloatArray:
    """Make the largest nuclear (else photon) component of each column positive."""
    fixed = vectors.copy()
    for column in range(fixed.shape[1]):
        part = fixed[:n_nuclear, column]
        if np.max(np.abs(part), initial=0.0) <= _SIGN_TOLERANCE:
            part = fixed[n_nuclear:, column]
        if part.size and part[int(np.argmax(np.abs(part)))] < 0.0:
            fixed[:, column] *= -1.0
    return fixed


def symmetric_eigh(matrix: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Return ascending eigenpairs of a symmetric matrix."""
    scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
    if np.max(np.abs(matrix - matrix.T), initial=0.0) > _SYMMETRY_TOLERANCE * scale:
        raise NonSymmetricInputError("force-constant matrix is not symmetric")
    try:
        return scipy.linalg.eigh(0.5 * (matrix + matrix.T))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverFailureError(f"symmetric eigensolver failed: {exc}") from exc


def nuclear_normal_modes(
    c_rr: FloatArray, masses: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Return (omega^2, U) of the mass-weighted nuclear Hessian."""
    weights = 1.0 / np.sqrt(masses)
    eigenvalues, vectors = symmetric_eigh(c_rr * np.outer(weights, weights))
    return eigenvalues, fix_signs(vectors, vectors.shape[0])


def solve_modes(fcs: ForceConstantSet, system: CoupledSystem) -> list[PolaritonMode]:
    """Diagonalize the mass-weighted generalized force-constant matrix.

    Modes come back in ascending omega^2; negative eigenvalues are kept and
    flagged as imaginary.
    """
    if fcs.n_nuclear != system.n_nuclear or fcs.n_photons != system.n_photons:
        raise DimensionMismatchError(
            f"force constants cover {fcs.n_nuclear}+{fcs.n_photons} coordinates, "
            f"system has {system.n_nuclear}+{system.n_photons}"
        )
    masses = system.generalized_masses
    weights = 1.0 / np.sqrt(masses)
    full = generalized_force_constant_matrix(fcs)
    eigenvalues, vectors = symmetric_eigh(full * np.outer(weights, weights))
    vectors = fix_signs(vectors, system.n_nuclear)

    modes = []
    for index, eigenvalue in enumerate(eigenvalues):
        u = vectors[:, index]
        eta = weights * u
        eta /= np.sqrt(eta @ (masses * eta))
        modes.append(
            PolaritonMode(
                index=index,
                eigenvalue=float(eigenvalue),
                eta_r=eta[: system.n_nuclear],
                eta_q=eta[system.n_nuclear :],
                u=u,
                photon_character=float(u[system.n_nuclear :] @ u[system.n_nuclear :]),
            )
        )

    imaginary = [mode.index for mode in modes if mode.imaginary]
    if imaginary:
        logger.warning("Modes %s have imaginary frequencies", imaginary)
    return modes


def mode_effective_charges(
    modes: list[PolaritonMode], fcs: ForceConstantSet
) -> list[PolaritonMode]:
    """Fill Z* = dmu/dR . eta_R + dmu/dq . eta_q for every mode."""
    if fcs.dmu_dr.shape != (3, fcs.n_nuclear) or fcs.dmu_dq.shape != (3, fcs.n_photons):
        raise MissingDipoleDerivativesError(
            "dipole derivatives are missing or malformed"
        )
    return [
        replace(
            mode,
            z_star_nuclear=fcs.dmu_dr @ mode.eta_r,
            z_star_photon=fcs.dmu_dq @ mode.eta_q,
        )
        for mode in modes
    ]


@dataclass(frozen=True, slots=True, eq=False)
class IRSpectrum:
    """Lorentzian-broadened IR absorption on a wavenumber grid."""

    grid_cm1: FloatArray
    intensity: FloatArray
    broadening_cm1: float
    sticks_cm1: FloatArray
    stick_amplitudes: FloatArray
    excluded: tuple[int, ...] = ()

    def area(self) -> float:
        """Return the trapezoid-rule integral of the spectrum."""
        return float(trapezoid(self.intensity, self.grid_cm1))


def default_grid() -> FloatArray:
    """Return 0..4000 cm^-1 at 1 cm^-1 spacing."""
    start, stop, points = DEFAULT_GRID_CM1
    return np.linspace(start, stop, points)


def ir_spectrum(
    modes: list[PolaritonMode],
    grid_cm1: FloatArray | None = None,
    broadening_cm1: float = DEFAULT_BROADENING_CM1,
    amplitude_scale: float = 1.0,
) -> IRSpectrum:
    """Sum area-normalized Lorentzians weighted by |Z*|^2.

    Imaginary modes are excluded. ``amplitude_scale`` multiplies every
    stick and is used to put collective spectra on a per-molecule footing.
    """
    if not broadening_cm1 > 0:
        raise NonpositiveBroadeningError(
            f"broadening must be positive, got {broadening_cm1}"
        )
    grid = default_grid() if grid_cm1 is None else np.asarray(grid_cm1, dtype=float)
    if any(mode.z_star is None for mode in modes):
        raise MissingDipoleDerivativesError(
            "mode effective charges have not been computed"
        )

    kept = [mode for mode in modes if not mode.imaginary]
    excluded = tuple(mode.index for mode in modes if mode.imaginary)
    sticks = np.array([hartree_to_cm1(mode.omega) for mode in kept])
    amplitudes = amplitude_scale * np.array([mode.ir_amplitude for mode in kept])

    intensity = np.zeros_like(grid)
    for center, amplitude in zip(sticks, amplitudes, strict=True):
        intensity += amplitude * cauchy.pdf(grid, loc=center, scale=broadening_cm1)
    return IRSpectrum(
        grid_cm1=grid,
        intensity=intensity,
        broadening_cm1=broadening_cm1,
        sticks_cm1=sticks,
        stick_amplitudes=amplitudes,
        excluded=excluded,
    )


@dataclass(frozen=True, slots=True, eq=False)
class ReferenceStates:
    """Labelled unit vectors in the mass-weighted generalized space."""

    labels: tuple[str, ...]
    vectors: FloatArray


def photon_reference_states(system: CoupledSystem) -> ReferenceStates:
    """Return the pure-photon unit vectors e_(3N + alpha)."""
    vectors = np.zeros((system.n_photons, system.n_dof))
    for alpha in range(system.n_photons):
        vectors[alpha, system.n_nuclear + alpha] = 1.0
    return ReferenceStates(
        labels=tuple(f"photon_{alpha}" for alpha in range(system.n_photons)),
        vectors=vectors,
    )


def bare_mode_reference_states(modes: list[PolaritonMode]) -> ReferenceStates:
    """Return the mass-weighted vectors of previously solved modes."""
    return ReferenceStates(
        labels=tuple(f"mode_{mode.index}" for mode in modes),
        vectors=np.stack([mode.u for mode in modes]),
    )


def projection_report(
    modes: list[PolaritonMode], references: ReferenceStates
) -> FloatArray:
    """Return |<u_i|ref_j>|^2 for every mode i and reference j."""
    vectors = np.atleast_2d(references.vectors)
    n_dof = modes[0].u.shape[0] if modes else vectors.shape[1]
    if vectors.shape[1] != n_dof:
        raise DimensionMismatchError(
            f"reference vectors have length {vectors.shape[1]}, modes have {n_dof}"
        )
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        raise DimensionMismatchError("reference vectors must be nonzero")
    units = vectors / norms[:, np.newaxis]
    basis = np.stack([mode.u for mode in modes])
    return (basis @ units.T) ** 2


def polariton_alignment(
    mode: PolaritonMode, fcs: ForceConstantSet, system: CoupledSystem
) -> float:
    """Return sum_a (lambda_hat_a . dmu/dR eta_R) eta_q[a].

    Positive when the nuclear dipole change and the photon displacement of a
    mode point the same way (aligned), negative when anti-aligned.
    """
    nuclear_dipole = fcs.dmu_dr @ mode.eta_r
    directions = np.array(
        [photon.direction for photon in system.photon_modes], dtype=float
    ).reshape(-1, 3)
    return float(np.sum((directions @ nuclear_dipole) * mode.eta_q))


def identify_polaritons(
    modes: list[PolaritonMode], vibration: FloatArray, photon: FloatArray
) -> tuple[PolaritonMode, PolaritonMode]:
    """Return (lower, upper) polaritons formed by a vibration and a photon.

    The two modes with the largest combined weight on both reference vectors
    are chosen, then ordered by frequency.
    """
    if len(modes) < 2:
        raise DimensionMismatchError("need at least two modes to find a polariton pair")
    references = ReferenceStates(
        labels=("vibration", "photon"), vectors=np.stack([vibration, photon])
    )
    weights = projection_report(modes, references).sum(axis=1)
    chosen = sorted(np.argsort(weights)[-2:], key=lambda index: modes[index].eigenvalue)
    return modes[chosen[0]], modes[chosen[1]]


def rabi_splitting(lower: PolaritonMode, upper: PolaritonMode) -> float:
    """Return omega_+ - omega_- in cm^-1."""
    return float(hartree_to_cm1(upper.omega) - hartree_to_cm1(lower.omega))


def spectrum_grid(start_cm1: float, stop_cm1: float, points: int) -> FloatArray:
    """Return an evenly spaced wavenumber grid."""
    if points < 2 or not stop_cm1 > start_cm1:
        raise DimensionMismatchError("spectrum grid needs 2+ points and stop > start")
    return np.linspace(start_cm1, stop_cm1, points)


def frequency_cm1(mode: PolaritonMode) -> float:
    """Return the signed frequency in cm^-1 (negative for imaginary modes)."""
    value = float(hartree_to_cm1(mode.omega))
    return -value if mode.imaginary else value


def band_contains(mode: PolaritonMode, center_cm1: float, halfwidth_cm1: float) -> bool:
    """Return True when a real mode lies within center +- halfwidth."""
    if mode.imaginary:
        return False
    return abs(mode.omega - cm1_to_hartree(center_cm1)) <= cm1_to_hartree(halfwidth_cm1)
