"""Effective harmonic models of vibro-polaritons.

The full model is expressed in uncoupled vibrational normal-mode coordinates
N_I and photon coordinates q_alpha. The mu2 model freezes every
lambda-dependent parameter at its uncoupled value and the Hopfield model
additionally drops the quadratic dipole self-energy term, leaving bilinearly
coupled oscillators.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from scipy.linalg import block_diag

from .errors import BackendLacksForceSplitError, DimensionMismatchError, NotTwoModeError
from .finite_difference import central_difference_jacobian
from .hessian import assemble_force_constants, generalized_force_constant_matrix
from .models import (
    CoupledSystem,
    FDSettings,
    FloatArray,
    ForceConstantSet,
    PolaritonMode,
    RelaxationSettings,
)
from .polariton import (
    fix_signs,
    identify_polaritons,
    nuclear_normal_modes,
    solve_modes,
    symmetric_eigh,
)
from .relaxation import relax
from .surface import CBOSurface
from .system import uncoupled, with_coupling
from .units import hartree_to_cm1

logger = logging.getLogger(__name__)

_COLLINEAR_TOLERANCE = 1e-6


class ModelVariant(StrEnum):
    """Levels of the harmonic model hierarchy."""

    FULL = "full"
    MU2 = "mu2"
    HOPFIELD = "hopfield"


class TwoModeBranch(StrEnum):
    """Ways of turning two-mode parameters into polariton frequencies."""

    EXACT = "exact"
    CLOSED_FORM = "closed-form"
    UNSCALED = "unscaled"


@dataclass(frozen=True, slots=True, eq=False)
class HarmonicModelParams:
    """Parameters of the harmonic model in the uncoupled normal-mode basis.

    Vibrational quantities are indexed by all 3 N_nuc uncoupled modes,
    translations and rotations included.
    """

    omega_squared: FloatArray
    eta0: FloatArray
    u0: FloatArray
    z_ionic: FloatArray
    dmu_dn: FloatArray
    dmu_dn_uncoupled: FloatArray
    dmu_dq: FloatArray
    xi: FloatArray
    theta: FloatArray
    photon_omegas: FloatArray
    photon_lambdas: FloatArray
    photon_directions: FloatArray
    xi_cartesian: FloatArray | None = None
    xi_asymmetry: float = 0.0

    @property
    def n_modes(self) -> int:
        """Return the number of vibrational modes."""
        return self.omega_squared.shape[0]

    @property
    def n_photons(self) -> int:
        """Return the number of photon modes."""
        return self.photon_omegas.shape[0]

    @property
    def omega(self) -> FloatArray:
        """Return uncoupled vibration frequencies (negative when imaginary)."""
        return np.sign(self.omega_squared) * np.sqrt(np.abs(self.omega_squared))


@dataclass(frozen=True, slots=True, eq=False)
class ReferenceSolve:
    """Uncoupled (lambda = 0) solve that fixes the model basis."""

    force_constants: ForceConstantSet
    omega_squared: FloatArray
    u0: FloatArray
    eta0: FloatArray


@dataclass(frozen=True, slots=True, eq=False)
class CouplingAnalysis:
    """Coupled first-principles data with the model parameters extracted from it."""

    system: CoupledSystem
    force_constants: ForceConstantSet
    modes: list[PolaritonMode]
    params: HarmonicModelParams


def reference_solve(
    surface: CBOSurface,
    fd_settings: FDSettings | None = None,
    relax_settings: RelaxationSettings | None = None,
) -> ReferenceSolve:
    """Relax and diagonalize the system with every coupling switched off."""
    bare = surface.with_system(uncoupled(surface.system))
    equilibrium = relax(bare, relax_settings)
    fcs = assemble_force_constants(bare, equilibrium, fd_settings)
    masses = bare.system.nuclear_masses
    omega_squared, u0 = nuclear_normal_modes(fcs.c_rr, masses)
    return ReferenceSolve(
        force_constants=fcs,
        omega_squared=omega_squared,
        u0=u0,
        eta0=u0 / np.sqrt(masses)[:, np.newaxis],
    )


def _noncoupling_jacobian(
    surface: CBOSurface, point: FloatArray, fd_settings: FDSettings
) -> FloatArray:
    """Return d(-F^nc)/d(R, q) as a (3 N_nuc, n_dof) array."""
    system = surface.system
    steps = np.concatenate(
        [
            np.full(system.n_nuclear, fd_settings.nuclear_step),
            np.full(system.n_photons, fd_settings.photon_step),
        ]
    )

    def minus_force(flat: FloatArray) -> FloatArray:
        positions, photon = system.split(flat)
        return -surface.noncoupling_forces(positions, photon)

    return central_difference_jacobian(
        minus_force,
        point,
        steps,
        levels=fd_settings.richardson_levels,
        workers=fd_settings.workers,
    ).jacobian


def analyze_coupling(
    surface: CBOSurface,
    fd_settings: FDSettings | None = None,
    relax_settings: RelaxationSettings | None = None,
    reference: ReferenceSolve | None = None,
) -> CouplingAnalysis:
    """Run the coupled pipeline and extract the harmonic model parameters."""
    if not surface.supports_force_split:
        raise BackendLacksForceSplitError(
            f"{type(surface).__name__} cannot separate the cavity coupling force; "
            "Xi and Theta are unavailable"
        )
    fd_settings = fd_settings or FDSettings()
    system = surface.system
    reference = reference or reference_solve(surface, fd_settings, relax_settings)

    equilibrium = relax(surface, relax_settings)
    fcs = assemble_force_constants(surface, equilibrium, fd_settings)
    modes = solve_modes(fcs, system)

    n_nuclear = system.n_nuclear
    jacobian = _noncoupling_jacobian(surface, equilibrium.flat(), fd_settings)
    b_matrix = jacobian[:, :n_nuclear]
    eta0 = reference.eta0

    xi_raw = eta0.T @ b_matrix @ eta0 - np.diag(reference.omega_squared)
    xi_asymmetry = float(np.max(np.abs(xi_raw - xi_raw.T), initial=0.0))
    logger.debug("Xi asymmetry before symmetrization: %.2e", xi_asymmetry)

    weights = 1.0 / np.sqrt(system.nuclear_masses)
    bare_dynamical = reference.force_constants.c_rr * np.outer(weights, weights)
    xi_cartesian = b_matrix * np.outer(weights, weights) - bare_dynamical

    directions = np.array(
        [mode.direction for mode in system.photon_modes], dtype=float
    ).reshape(-1, 3)
    params = HarmonicModelParams(
        omega_squared=reference.omega_squared,
        eta0=eta0,
        u0=reference.u0,
        z_ionic=system.charge_matrix @ eta0,
        dmu_dn=fcs.dmu_dr @ eta0,
        dmu_dn_uncoupled=reference.force_constants.dmu_dr @ eta0,
        dmu_dq=fcs.dmu_dq,
        xi=0.5 * (xi_raw + xi_raw.T),
        theta=(eta0.T @ jacobian[:, n_nuclear:]).T,
        photon_omegas=system.photon_omegas,
        photon_lambdas=system.photon_lambdas,
        photon_directions=directions,
        xi_cartesian=0.5 * (xi_cartesian + xi_cartesian.T),
        xi_asymmetry=xi_asymmetry,
    )
    return CouplingAnalysis(
        system=system, force_constants=fcs, modes=modes, params=params
    )


def extract_params(
    system: CoupledSystem,
    surface: CBOSurface,
    fd_settings: FDSettings | None = None,
    relax_settings: RelaxationSettings | None = None,
) -> HarmonicModelParams:
    """Return the harmonic model parameters of system on surface."""
    analysis = analyze_coupling(
        surface.with_system(system), fd_settings, relax_settings
    )
    return analysis.params


def _variant_inputs(
    params: HarmonicModelParams, variant: ModelVariant
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Return (Xi, dmu/dN, dmu/dq) as seen by a model variant."""
    if variant is ModelVariant.FULL:
        return params.xi, params.dmu_dn, params.dmu_dq
    return (
        np.zeros_like(params.xi),
        params.dmu_dn_uncoupled,
        np.zeros_like(params.dmu_dq),
    )


def model_force_constants(
    params: HarmonicModelParams, variant: ModelVariant = ModelVariant.FULL
) -> FloatArray:
    """Assemble the model quadratic form in the (N, q) basis."""
    xi, dmu_dn, dmu_dq = _variant_inputs(params, variant)
    lambdas = params.photon_lambdas
    weighted = params.photon_omegas[:, np.newaxis] * lambdas

    vibration = np.diag(params.omega_squared) + xi
    if variant is not ModelVariant.HOPFIELD:
        vibration = vibration + (lambdas @ params.z_ionic).T @ (lambdas @ dmu_dn)
    photon = np.diag(params.photon_omegas**2) - weighted @ dmu_dq
    bilinear = -weighted @ dmu_dn
    return np.block(
        [
            [0.5 * (vibration + vibration.T), bilinear.T],
            [bilinear, 0.5 * (photon + photon.T)],
        ]
    )


def model_modes(
    params: HarmonicModelParams, variant: ModelVariant = ModelVariant.FULL
) -> list[PolaritonMode]:
    """Diagonalize a model variant with unit masses.

    ``eta_r`` of the returned modes holds normal-mode (N) components.
    """
    _, dmu_dn, dmu_dq = _variant_inputs(params, variant)
    eigenvalues, vectors = symmetric_eigh(model_force_constants(params, variant))
    vectors = fix_signs(vectors, params.n_modes)
    modes = []
    for index, eigenvalue in enumerate(eigenvalues):
        u = vectors[:, index]
        photon_part = u[params.n_modes :]
        modes.append(
            PolaritonMode(
                index=index,
                eigenvalue=float(eigenvalue),
                eta_r=u[: params.n_modes],
                eta_q=photon_part,
                u=u,
                photon_character=float(photon_part @ photon_part),
                z_star_nuclear=dmu_dn @ u[: params.n_modes],
                z_star_photon=dmu_dq @ photon_part,
            )
        )
    return modes


def pipeline_in_model_basis(
    fcs: ForceConstantSet, params: HarmonicModelParams
) -> FloatArray:
    """Rotate the first-principles C~ into the (N, q) basis of the model."""
    if fcs.n_nuclear != params.eta0.shape[0] or fcs.n_photons != params.n_photons:
        raise DimensionMismatchError("force constants and model parameters disagree")
    basis = block_diag(params.eta0, np.eye(params.n_photons))
    return basis.T @ generalized_force_constant_matrix(fcs) @ basis


def maxwell_residual(params: HarmonicModelParams) -> FloatArray:
    """Return the (N_pt, N_modes) residual of the mixed-derivative relation.

    Theta_aI - Z_I.(lambda_a omega_a - sum_b lambda_b (lambda_b.dmu/dq_a))
    + omega_a lambda_a.dmu/dN_I vanishes when the second derivatives of E
    commute.
    """
    lambdas = params.photon_lambdas
    coupling = lambdas.T @ lambdas
    drive = lambdas.T * params.photon_omegas - coupling @ params.dmu_dq
    return (
        params.theta
        - drive.T @ params.z_ionic
        + (params.photon_omegas[:, np.newaxis] * lambdas) @ params.dmu_dn
    )


def bright_vibration(params: HarmonicModelParams, photon: int = 0) -> int:
    """Return the uncoupled mode with the largest dipole change along a polarization."""
    if not 0 <= photon < params.n_photons:
        raise DimensionMismatchError(f"no photon mode {photon}")
    projected = params.photon_directions[photon] @ params.dmu_dn_uncoupled
    return int(np.argmax(np.abs(projected)))


@dataclass(frozen=True, slots=True)
class TwoModeInputs:
    """Scalar parameters of one vibration coupled to one photon mode.

    Vector quantities are projected on the polarization direction.
    """

    omega_n: float
    omega_q: float
    coupling: float
    z_ionic: float
    dmu_dn: float
    dmu_dq: float
    xi: float = 0.0


@dataclass(frozen=True, slots=True)
class TwoModeResult:
    """Effective parameters and polariton frequencies (Hartree)."""

    omega_n_eff: float
    omega_q_eff: float
    lambda_eff: float
    omega_minus: float
    omega_plus: float
    omega_minus_closed: float
    omega_plus_closed: float
    omega_minus_unscaled: float
    omega_plus_unscaled: float

    @property
    def splitting(self) -> float:
        """Return omega_+ - omega_- of the exact 2x2 solution."""
        return self.omega_plus - self.omega_minus

    @property
    def splitting_closed(self) -> float:
        """Return omega_+ - omega_- of the closed-form first-order expression."""
        return self.omega_plus_closed - self.omega_minus_closed

    def branch(self, branch: TwoModeBranch) -> tuple[float, float]:
        """Return (omega_-, omega_+) of one branch."""
        if branch is TwoModeBranch.CLOSED_FORM:
            return self.omega_minus_closed, self.omega_plus_closed
        if branch is TwoModeBranch.UNSCALED:
            return self.omega_minus_unscaled, self.omega_plus_unscaled
        return self.omega_minus, self.omega_plus


def _signed_sqrt(value: float) -> float:
    return float(np.sign(value) * np.sqrt(abs(value)))


def two_mode(inputs: TwoModeInputs) -> TwoModeResult:
    """Solve the two-mode model exactly and with the closed-form expression.

    The closed form uses the coupling in frequency units,
    g = lambda_eff / (2 sqrt(omega_N_eff omega_q_eff)), so both branches agree
    to first order in lambda_eff. The unscaled branch evaluates the same
    expression with lambda_eff itself in place of g; lambda_eff carries
    frequency-squared units there, so it is reported for comparison only.
    """
    values = (
        inputs.omega_n,
        inputs.omega_q,
        inputs.coupling,
        inputs.z_ionic,
        inputs.dmu_dn,
        inputs.dmu_dq,
        inputs.xi,
    )
    if not all(np.isfinite(value) for value in values):
        raise NotTwoModeError("two-mode parameters must be finite")

    coupling_sq = inputs.coupling**2
    vibration_sq = (
        inputs.omega_n**2 + inputs.xi + coupling_sq * inputs.z_ionic * inputs.dmu_dn
    )
    photon_sq = inputs.omega_q**2 - inputs.coupling * inputs.omega_q * inputs.dmu_dq
    lambda_eff = -inputs.coupling * inputs.omega_q * inputs.dmu_dn
    if vibration_sq <= 0.0 or photon_sq <= 0.0:
        raise NotTwoModeError("effective two-mode frequencies are not real")

    mean = 0.5 * (vibration_sq + photon_sq)
    root = float(np.hypot(lambda_eff, 0.5 * (vibration_sq - photon_sq)))

    omega_n_eff = float(np.sqrt(vibration_sq))
    omega_q_eff = float(np.sqrt(photon_sq))
    g = lambda_eff / (2.0 * np.sqrt(omega_n_eff * omega_q_eff))
    centre = 0.5 * (omega_n_eff + omega_q_eff)
    spread = float(np.hypot(g, 0.5 * (omega_q_eff - omega_n_eff)))
    unscaled = float(np.hypot(lambda_eff, 0.5 * (omega_q_eff - omega_n_eff)))
    return TwoModeResult(
        omega_n_eff=omega_n_eff,
        omega_q_eff=omega_q_eff,
        lambda_eff=lambda_eff,
        omega_minus=_signed_sqrt(mean - root),
        omega_plus=_signed_sqrt(mean + root),
        omega_minus_closed=centre - spread,
        omega_plus_closed=centre + spread,
        omega_minus_unscaled=centre - unscaled,
        omega_plus_unscaled=centre + unscaled,
    )


def _collinear(vector: FloatArray, direction: FloatArray) -> bool:
    perpendicular = vector - (direction @ vector) * direction
    scale = max(float(np.linalg.norm(vector)), 1e-300)
    return float(np.linalg.norm(perpendicular)) <= _COLLINEAR_TOLERANCE * scale


def reduce_to_two_mode(
    params: HarmonicModelParams,
    vibration: int,
    variant: ModelVariant = ModelVariant.FULL,
) -> TwoModeInputs:
    """Project one vibration and the single photon mode onto scalar inputs."""
    if params.n_photons != 1:
        raise NotTwoModeError(
            f"two-mode reduction needs one photon mode, got {params.n_photons}"
        )
    if not 0 <= vibration < params.n_modes:
        raise NotTwoModeError(f"no vibration {vibration}")

    xi, dmu_dn, dmu_dq = _variant_inputs(params, variant)
    direction = params.photon_directions[0]
    if not np.linalg.norm(direction) > 0:
        raise NotTwoModeError("photon mode has no polarization direction")
    dipole = dmu_dn[:, vibration]
    charge = params.z_ionic[:, vibration]
    if not (_collinear(dipole, direction) and _collinear(charge, direction)):
        raise NotTwoModeError(
            f"vibration {vibration} dipole derivative is not collinear with the "
            "polarization"
        )
    return TwoModeInputs(
        omega_n=float(params.omega[vibration]),
        omega_q=float(params.photon_omegas[0]),
        coupling=float(direction @ params.photon_lambdas[0]),
        z_ionic=0.0 if variant is ModelVariant.HOPFIELD else float(direction @ charge),
        dmu_dn=float(direction @ dipole),
        dmu_dq=float(direction @ dmu_dq[:, 0]),
        xi=float(xi[vibration, vibration]),
    )


def _pipeline_pair(
    analysis: CouplingAnalysis, vibration: int, photon: int
) -> tuple[PolaritonMode, PolaritonMode]:
    system = analysis.system
    reference = np.zeros(system.n_dof)
    reference[: system.n_nuclear] = analysis.params.u0[:, vibration]
    photon_state = np.zeros(system.n_dof)
    photon_state[system.n_nuclear + photon] = 1.0
    return identify_polaritons(analysis.modes, reference, photon_state)


def _model_pair(
    params: HarmonicModelParams, variant: ModelVariant, vibration: int, photon: int
) -> tuple[PolaritonMode, PolaritonMode]:
    size = params.n_modes + params.n_photons
    reference = np.zeros(size)
    reference[vibration] = 1.0
    photon_state = np.zeros(size)
    photon_state[params.n_modes + photon] = 1.0
    return identify_polaritons(model_modes(params, variant), reference, photon_state)


@dataclass(frozen=True, slots=True)
class PolaritonPair:
    """Lower and upper polariton frequencies in cm^-1."""

    omega_minus_cm1: float
    omega_plus_cm1: float

    @property
    def splitting_cm1(self) -> float:
        """Return omega_+ - omega_-."""
        return self.omega_plus_cm1 - self.omega_minus_cm1

    @classmethod
    def from_modes(cls, pair: tuple[PolaritonMode, PolaritonMode]) -> PolaritonPair:
        """Build from a (lower, upper) mode pair."""
        return cls(
            omega_minus_cm1=float(hartree_to_cm1(pair[0].omega)),
            omega_plus_cm1=float(hartree_to_cm1(pair[1].omega)),
        )

    @classmethod
    def from_two_mode(
        cls, result: TwoModeResult, branch: TwoModeBranch = TwoModeBranch.EXACT
    ) -> PolaritonPair:
        """Build from one branch of a two-mode solution."""
        lower, upper = result.branch(branch)
        return cls(
            omega_minus_cm1=float(hartree_to_cm1(lower)),
            omega_plus_cm1=float(hartree_to_cm1(upper)),
        )


@dataclass(frozen=True, slots=True, eq=False)
class SweepRow:
    """One coupling strength of a lambda sweep."""

    coupling: float
    vibration: int
    pipeline: PolaritonPair
    variants: dict[ModelVariant, PolaritonPair]
    two_mode_inputs: TwoModeInputs | None
    two_mode_result: TwoModeResult | None
    params: HarmonicModelParams = field(repr=False)

    def coupling_parameters(self, photon: int = 0) -> dict[str, float]:
        """Return Xi, dmu/dN, dmu/dq and lambda_eff of the tracked vibration.

        Vector quantities are projected on the polarization of ``photon``.
        """
        params = self.params
        direction = params.photon_directions[photon]
        dmu_dn = float(direction @ params.dmu_dn[:, self.vibration])
        coupling = float(direction @ params.photon_lambdas[photon])
        omega_q = float(params.photon_omegas[photon])
        return {
            "xi": float(params.xi[self.vibration, self.vibration]),
            "dmu_dn": dmu_dn,
            "dmu_dq": float(direction @ params.dmu_dq[:, photon]),
            "lambda_eff": -coupling * omega_q * dmu_dn,
        }


def _sweep_point(
    surface: CBOSurface,
    coupling: float,
    variants: tuple[ModelVariant, ...],
    fd_settings: FDSettings | None,
    relax_settings: RelaxationSettings | None,
    reference: ReferenceSolve,
    vibration: int | None,
) -> SweepRow:
    coupled = surface.with_system(with_coupling(surface.system, coupling))
    analysis = analyze_coupling(coupled, fd_settings, relax_settings, reference)
    params = analysis.params
    target = bright_vibration(params) if vibration is None else vibration
    logger.info("Sweep point lambda=%.6g (vibration %d)", coupling, target)

    inputs = result = None
    if params.n_photons == 1:
        try:
            inputs = reduce_to_two_mode(params, target)
            result = two_mode(inputs)
        except NotTwoModeError as exc:
            logger.warning("No two-mode reduction at lambda=%.6g: %s", coupling, exc)

    return SweepRow(
        coupling=coupling,
        vibration=target,
        pipeline=PolaritonPair.from_modes(_pipeline_pair(analysis, target, 0)),
        variants={
            variant: PolaritonPair.from_modes(_model_pair(params, variant, target, 0))
            for variant in variants
        },
        two_mode_inputs=inputs,
        two_mode_result=result,
        params=params,
    )


def lambda_sweep(
    surface: CBOSurface,
    couplings: list[float],
    variants: tuple[ModelVariant, ...] = tuple(ModelVariant),
    fd_settings: FDSettings | None = None,
    relax_settings: RelaxationSettings | None = None,
    vibration: int | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    """Solve the pipeline and every model variant for each coupling strength.

    Rows follow the order of ``couplings`` whatever the worker count.
    """
    if not surface.system.photon_modes:
        raise DimensionMismatchError("a coupling sweep needs at least one photon mode")
    if not surface.supports_force_split:
        raise BackendLacksForceSplitError(
            f"{type(surface).__name__} cannot separate the cavity coupling force"
        )
    if not all(np.isfinite(value) for value in couplings):
        raise DimensionMismatchError("coupling strengths must be finite")
    reference = reference_solve(surface, fd_settings, relax_settings)

    def point(coupling: float) -> SweepRow:
        return _sweep_point(
            surface,
            coupling,
            variants,
            fd_settings,
            relax_settings,
            reference,
            vibration,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(point, couplings))
    return [point(coupling) for coupling in couplings]


@dataclass(frozen=True, slots=True, eq=False)
class ModelComparison:
    """Polariton pairs from the pipeline, each variant and the two-mode forms."""

    vibration: int
    rows: dict[str, PolaritonPair]
    two_mode: dict[ModelVariant, TwoModeResult]
    params: HarmonicModelParams = field(repr=False)


def model_compare(
    surface: CBOSurface,
    fd_settings: FDSettings | None = None,
    relax_settings: RelaxationSettings | None = None,
    vibration: int | None = None,
) -> ModelComparison:
    """Compare every model level at the coupling of the bound system."""
    analysis = analyze_coupling(surface, fd_settings, relax_settings)
    params = analysis.params
    target = bright_vibration(params) if vibration is None else vibration

    rows = {"pipeline": PolaritonPair.from_modes(_pipeline_pair(analysis, target, 0))}
    results: dict[ModelVariant, TwoModeResult] = {}
    for variant in ModelVariant:
        rows[f"model-{variant.value}"] = PolaritonPair.from_modes(
            _model_pair(params, variant, target, 0)
        )
        try:
            result = two_mode(reduce_to_two_mode(params, target, variant))
        except NotTwoModeError as exc:
            logger.warning("No two-mode %s reduction: %s", variant.value, exc)
            continue
        results[variant] = result
        rows[f"two-mode-{variant.value}"] = PolaritonPair.from_two_mode(result)
        for branch in (TwoModeBranch.CLOSED_FORM, TwoModeBranch.UNSCALED):
            rows[f"two-mode-{variant.value}-{branch.value}"] = (
                PolaritonPair.from_two_mode(result, branch)
            )
    return ModelComparison(vibration=target, rows=rows, two_mode=results, params=params)
