"""Collective coupling of many identical molecules to the same cavity modes.

The N-molecule harmonic model is assembled from one-molecule parameters at
coupling sqrt(N) lambda and, for the inter-molecular Xi blocks, from
two-molecule parameters at sqrt(N / 2) lambda.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np

from .errors import (
    DimensionMismatchError,
    InconsistentScalingError,
    NonOrthogonalBasisError,
)
from .harmonic import (
    HarmonicModelParams,
    analyze_coupling,
    bright_vibration,
    model_modes,
    reference_solve,
)
from .hessian import assemble_force_constants
from .models import FDSettings, FloatArray, PolaritonMode, RelaxationSettings
from .polariton import (
    IRSpectrum,
    band_contains,
    frequency_cm1,
    identify_polaritons,
    ir_spectrum,
    mode_effective_charges,
    rabi_splitting,
    solve_modes,
)
from .relaxation import relax
from .surface import CBOSurface
from .system import DEFAULT_MOLECULE_SPACING, molecule_sizes, scale_coupling
from .units import hartree_to_cm1

logger = logging.getLogger(__name__)

DEFAULT_DARK_THRESHOLD = 1e-8
DEFAULT_BAND_HALFWIDTH_CM1 = 50.0
ZERO_MODE_CUTOFF_CM1 = 10.0
_ORTHOGONALITY_TOLERANCE = 1e-8
_SEPARATION_TOLERANCE = 1e-10
_EQUIVALENCE_TOLERANCE = 1e-8


class CollectiveSource(StrEnum):
    """Where the coupled per-molecule parameters come from."""

    SPLIT = "split"
    PAIR = "pair"


@dataclass(frozen=True, slots=True, eq=False)
class CollectiveSpec:
    """Inputs of the N-molecule model."""

    n_mol: int
    photon_omegas: FloatArray
    target_lambdas: FloatArray
    single: HarmonicModelParams
    pair: HarmonicModelParams | None = None
    dark_threshold: float = DEFAULT_DARK_THRESHOLD
    band_halfwidth_cm1: float = DEFAULT_BAND_HALFWIDTH_CM1
    spacing: float = DEFAULT_MOLECULE_SPACING


@dataclass(frozen=True, slots=True, eq=False)
class CollectiveModel:
    """N-molecule model; vibration (M, I) sits at index M * n_vib + I."""

    n_mol: int
    n_vib: int
    params: HarmonicModelParams

    def index(self, molecule: int, mode: int) -> int:
        """Return the flat vibration index of mode I on molecule M."""
        if not (0 <= molecule < self.n_mol and 0 <= mode < self.n_vib):
            raise IndexError(f"no vibration ({molecule}, {mode})")
        return molecule * self.n_vib + mode


def rotate_two_molecule_xi(xi_pair: FloatArray, u_single: FloatArray) -> FloatArray:
    """Return (I2 x U1)^T Xi2 (I2 x U1) for a Cartesian two-molecule Xi."""
    n = u_single.shape[0]
    if u_single.shape != (n, n):
        raise DimensionMismatchError(f"U1 must be square, got {u_single.shape}")
    if xi_pair.shape != (2 * n, 2 * n):
        raise DimensionMismatchError(
            f"two-molecule Xi has shape {xi_pair.shape}, expected {(2 * n, 2 * n)}"
        )
    if np.max(np.abs(u_single.T @ u_single - np.eye(n))) > _ORTHOGONALITY_TOLERANCE:
        raise NonOrthogonalBasisError("single-molecule eigenvectors are not orthogonal")
    rotation = np.kron(np.eye(2), u_single)
    return rotation.T @ xi_pair @ rotation


def _check_scaling(
    name: str, params: HarmonicModelParams, spec: CollectiveSpec, factor: float
) -> None:
    expected = factor * spec.target_lambdas
    consistent = (
        params.photon_lambdas.shape == expected.shape
        and np.allclose(params.photon_lambdas, expected, rtol=1e-9, atol=1e-14)
        and np.allclose(params.photon_omegas, spec.photon_omegas, rtol=1e-12)
    )
    if not consistent:
        raise InconsistentScalingError(
            f"{name} parameters must be computed at {factor:.6g} x the target "
            "coupling with the same photon frequencies"
        )


def _cartesian(values: FloatArray, eta0: FloatArray) -> FloatArray:
    """Undo the projection X @ eta0 onto normal modes."""
    return np.linalg.solve(eta0.T, values.T).T


def build_collective_model(
    spec: CollectiveSpec, source: CollectiveSource = CollectiveSource.SPLIT
) -> CollectiveModel:
    """Assemble the N-molecule harmonic model.

    Diagonal Xi blocks are Xi1 / N; off-diagonal blocks are (2 / N) times the
    inter-molecular block of the rotated two-molecule Xi.
    """
    n_mol = spec.n_mol
    if n_mol < 1:
        raise InconsistentScalingError("number of molecules must be at least 1")
    single = spec.single
    _check_scaling("single-molecule", single, spec, np.sqrt(n_mol))
    n = single.n_modes

    pair_star = None
    if spec.pair is not None:
        _check_scaling("two-molecule", spec.pair, spec, np.sqrt(n_mol / 2))
        if spec.pair.xi_cartesian is None:
            raise DimensionMismatchError("two-molecule parameters lack Cartesian Xi")
        pair_star = rotate_two_molecule_xi(spec.pair.xi_cartesian, single.u0)
    elif n_mol > 1 or source is CollectiveSource.PAIR:
        raise InconsistentScalingError(
            f"{n_mol} molecules need two-molecule parameters"
        )

    if source is CollectiveSource.PAIR:
        pair = spec.pair
        dipole = _cartesian(pair.dmu_dn, pair.eta0)[:, : single.eta0.shape[0]]
        theta = _cartesian(pair.theta, pair.eta0)[:, : single.eta0.shape[0]]
        diagonal = 2.0 * pair_star[:n, :n] / n_mol
        dmu_dn = dipole @ single.eta0
        dmu_dq = np.sqrt(n_mol / 2) * pair.dmu_dq
        theta_single = np.sqrt(2.0 / n_mol) * theta @ single.eta0
    else:
        diagonal = single.xi / n_mol
        dmu_dn = single.dmu_dn
        dmu_dq = np.sqrt(n_mol) * single.dmu_dq
        theta_single = single.theta / np.sqrt(n_mol)

    xi = np.kron(np.eye(n_mol), diagonal)
    if pair_star is not None and n_mol > 1:
        offdiagonal = 2.0 * pair_star[:n, n:] / n_mol
        for first in range(n_mol):
            for second in range(first + 1, n_mol):
                xi[first * n : (first + 1) * n, second * n : (second + 1) * n] = (
                    offdiagonal
                )
                xi[second * n : (second + 1) * n, first * n : (first + 1) * n] = (
                    offdiagonal.T
                )

    params = HarmonicModelParams(
        omega_squared=np.tile(single.omega_squared, n_mol),
        eta0=np.kron(np.eye(n_mol), single.eta0),
        u0=np.kron(np.eye(n_mol), single.u0),
        z_ionic=np.tile(single.z_ionic, n_mol),
        dmu_dn=np.tile(dmu_dn, n_mol),
        dmu_dn_uncoupled=np.tile(single.dmu_dn_uncoupled, n_mol),
        dmu_dq=dmu_dq,
        xi=xi,
        theta=np.tile(theta_single, n_mol),
        photon_omegas=spec.photon_omegas,
        photon_lambdas=spec.target_lambdas,
        photon_directions=single.photon_directions,
    )
    return CollectiveModel(n_mol=n_mol, n_vib=n, params=params)


def _check_pair_blocks(c_rr: FloatArray) -> None:
    """Log when the two molecules differ or interact at lambda = 0."""
    half = c_rr.shape[0] // 2
    scale = float(np.max(np.abs(c_rr)))
    coupling = float(np.max(np.abs(c_rr[:half, half:])))
    if coupling > _SEPARATION_TOLERANCE * scale:
        logger.warning(
            "Molecules interact at lambda = 0 (block %.2e); increase the spacing",
            coupling,
        )
    difference = float(np.max(np.abs(c_rr[:half, :half] - c_rr[half:, half:])))
    if difference > _EQUIVALENCE_TOLERANCE * scale:
        logger.warning(
            "Molecule copies are not equivalent (difference %.2e)", difference
        )


def collective_inputs(
    surface: CBOSurface,
    n_mol: int,
    fd_settings: FDSettings | None = None,
    relax_settings: RelaxationSettings | None = None,
    spacing: float = DEFAULT_MOLECULE_SPACING,
    dark_threshold: float = DEFAULT_DARK_THRESHOLD,
    band_halfwidth_cm1: float = DEFAULT_BAND_HALFWIDTH_CM1,
    source: CollectiveSource = CollectiveSource.SPLIT,
) -> CollectiveSpec:
    """Compute one- and two-molecule parameters for a collective model.

    ``surface`` holds one molecule coupled at the target (N-molecule)
    strength; the N-molecule system itself is never built.
    """
    system = surface.system
    if len(molecule_sizes(system)) != 1:
        raise DimensionMismatchError("collective inputs need a single-molecule system")
    if n_mol < 1:
        raise InconsistentScalingError("number of molecules must be at least 1")

    logger.info("Single-molecule parameters at sqrt(%d) x lambda", n_mol)
    single_surface = surface.with_system(scale_coupling(system, np.sqrt(n_mol)))
    single = analyze_coupling(single_surface, fd_settings, relax_settings).params

    pair = None
    if n_mol > 1 or source is CollectiveSource.PAIR:
        logger.info("Two-molecule parameters at sqrt(%d / 2) x lambda", n_mol)
        pair_surface = surface.with_system(
            scale_coupling(system, np.sqrt(n_mol / 2))
        ).replicated(2, spacing)
        reference = reference_solve(pair_surface, fd_settings, relax_settings)
        _check_pair_blocks(reference.force_constants.c_rr)
        pair = analyze_coupling(
            pair_surface, fd_settings, relax_settings, reference
        ).params

    return CollectiveSpec(
        n_mol=n_mol,
        photon_omegas=system.photon_omegas,
        target_lambdas=system.photon_lambdas,
        single=single,
        pair=pair,
        dark_threshold=dark_threshold,
        band_halfwidth_cm1=band_halfwidth_cm1,
        spacing=spacing,
    )


def count_dark_modes(
    modes: list[PolaritonMode],
    direction: FloatArray,
    center_cm1: float,
    halfwidth_cm1: float,
    threshold: float = DEFAULT_DARK_THRESHOLD,
) -> int:
    """Count in-band modes whose IR amplitude along direction is below threshold."""
    count = 0
    for mode in modes:
        if mode.z_star is None or not band_contains(mode, center_cm1, halfwidth_cm1):
            continue
        if float(direction @ mode.z_star) ** 2 <= threshold:
            count += 1
    return count


@dataclass(frozen=True, slots=True, eq=False)
class CollectiveSide:
    """Modes and derived observables of one side of the comparison."""

    modes: list[PolaritonMode]
    splitting_cm1: float
    dark_mode_count: int
    spectrum: IRSpectrum


@dataclass(frozen=True, slots=True, eq=False)
class CollectiveReport:
    """Model versus direct N-molecule comparison."""

    n_mol: int
    vibration: int
    model: CollectiveSide
    direct: CollectiveSide | None = None
    per_mode: list[dict[str, float]] = field(default_factory=list)

    @property
    def max_mode_freq_diff_cm1(self) -> float | None:
        """Return the largest frequency difference over non-zero modes."""
        if self.direct is None:
            return None
        return max((row["diff_cm1"] for row in self.per_mode), default=0.0)

    def to_dict(self) -> dict[str, Any]:
        """Return the JSON payload of the report."""
        direct = self.direct
        return {
            "n_mol": self.n_mol,
            "vibration": self.vibration,
            "splitting_model": self.model.splitting_cm1,
            "splitting_direct": None if direct is None else direct.splitting_cm1,
            "dark_mode_count": self.model.dark_mode_count,
            "dark_mode_count_direct": (
                None if direct is None else direct.dark_mode_count
            ),
            "max_mode_freq_diff_cm1": self.max_mode_freq_diff_cm1,
            "per_mode": self.per_mode,
        }


def _side(
    modes: list[PolaritonMode],
    bright: FloatArray,
    photon: FloatArray,
    spec: CollectiveSpec,
    center_cm1: float,
    grid_cm1: FloatArray | None,
    broadening_cm1: float,
) -> CollectiveSide:
    lower, upper = identify_polaritons(modes, bright, photon)
    return CollectiveSide(
        modes=modes,
        splitting_cm1=rabi_splitting(lower, upper),
        dark_mode_count=count_dark_modes(
            modes,
            spec.single.photon_directions[0],
            center_cm1,
            spec.band_halfwidth_cm1,
            spec.dark_threshold,
        ),
        spectrum=ir_spectrum(
            modes, grid_cm1, broadening_cm1, amplitude_scale=1.0 / spec.n_mol
        ),
    )


def collective_spectrum_compare(
    spec: CollectiveSpec,
    surface: CBOSurface | None = None,
    fd_settings: FDSettings | None = None,
    relax_settings: RelaxationSettings | None = None,
    grid_cm1: FloatArray | None = None,
    broadening_cm1: float = 10.0,
    source: CollectiveSource = CollectiveSource.SPLIT,
) -> CollectiveReport:
    """Compare the assembled model against a direct N-molecule computation.

    ``surface`` is the single-molecule surface at the target coupling; pass
    None to skip the direct computation. Spectra carry |Z*|^2 / N, i.e.
    effective charges scaled by N^(-1/2).
    """
    model = build_collective_model(spec, source)
    params = model.params
    vibration = bright_vibration(spec.single)
    center_cm1 = float(hartree_to_cm1(spec.single.omega[vibration]))

    size = params.n_modes + params.n_photons
    bright = np.zeros(size)
    for molecule in range(spec.n_mol):
        bright[model.index(molecule, vibration)] = 1.0 / np.sqrt(spec.n_mol)
    photon = np.zeros(size)
    photon[params.n_modes] = 1.0
    model_side = _side(
        model_modes(params), bright, photon, spec, center_cm1, grid_cm1, broadening_cm1
    )

    if surface is None:
        return CollectiveReport(n_mol=spec.n_mol, vibration=vibration, model=model_side)
    direct_surface = surface.replicated(spec.n_mol, spec.spacing)
    system = direct_surface.system
    equilibrium = relax(direct_surface, relax_settings)
    fcs = assemble_force_constants(direct_surface, equilibrium, fd_settings)
    modes = mode_effective_charges(solve_modes(fcs, system), fcs)

    bright_direct = np.zeros(system.n_dof)
    n_single = spec.single.u0.shape[0]
    for molecule in range(spec.n_mol):
        block = slice(molecule * n_single, (molecule + 1) * n_single)
        bright_direct[block] = spec.single.u0[:, vibration] / np.sqrt(spec.n_mol)
    photon_direct = np.zeros(system.n_dof)
    photon_direct[system.n_nuclear] = 1.0
    direct_side = _side(
        modes, bright_direct, photon_direct, spec, center_cm1, grid_cm1, broadening_cm1
    )

    per_mode = []
    pairs = zip(model_side.modes, direct_side.modes, strict=True)
    for model_mode, direct_mode in pairs:
        model_cm1 = frequency_cm1(model_mode)
        if abs(model_cm1) < ZERO_MODE_CUTOFF_CM1:
            continue
        direct_cm1 = frequency_cm1(direct_mode)
        per_mode.append(
            {
                "index": model_mode.index,
                "model_cm1": model_cm1,
                "direct_cm1": direct_cm1,
                "diff_cm1": abs(model_cm1 - direct_cm1),
            }
        )
    return CollectiveReport(
        n_mol=spec.n_mol,
        vibration=vibration,
        model=model_side,
        direct=direct_side,
        per_mode=per_mode,
    )
