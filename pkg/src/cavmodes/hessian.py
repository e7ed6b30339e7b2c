"""Generalized force constants and dipole derivatives at an equilibrium."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigError, NonFiniteValueError
from .finite_difference import central_difference_jacobian
from .models import (
    CoupledSystem,
    Equilibrium,
    FDSettings,
    FloatArray,
    ForceConstantSet,
)
from .surface import CBOSurface

logger = logging.getLogger(__name__)

_EQUILIBRIUM_WARNING = 1e-6
_PHOTON_COUPLING_TOLERANCE = 1e-10


def _block_asymmetry(matrix: FloatArray, rows: slice, cols: slice) -> float:
    """Return max |A_rc - A_cr^T| relative to the block scale."""
    upper = matrix[rows, cols]
    lower = matrix[cols, rows].T
    scale = max(float(np.max(np.abs(upper), initial=0.0)), 1e-300)
    return float(np.max(np.abs(upper - lower), initial=0.0)) / scale


def assemble_force_constants(
    surface: CBOSurface,
    equilibrium: Equilibrium,
    settings: FDSettings | None = None,
) -> ForceConstantSet:
    """Differentiate forces and dipoles at equilibrium.

    Each displaced evaluation yields both a force-constant column and a
    dipole-derivative column.
    """
    settings = settings or FDSettings()
    system = surface.system
    n_nuclear = system.n_nuclear
    n_dof = system.n_dof

    at_rest = surface.evaluate(equilibrium.positions, equilibrium.photon)
    residual = float(np.max(np.abs(at_rest.gradient()), initial=0.0))
    if residual > _EQUILIBRIUM_WARNING:
        logger.warning(
            "Force constants requested away from equilibrium (max|F| = %.2e)", residual
        )

    steps = np.concatenate(
        [
            np.full(n_nuclear, settings.nuclear_step),
            np.full(system.n_photons, settings.photon_step),
        ]
    )

    def response(flat: FloatArray) -> FloatArray:
        point = surface.evaluate_flat(flat)
        return np.concatenate([point.gradient(), point.dipole])

    result = central_difference_jacobian(
        response,
        equilibrium.flat(),
        steps,
        levels=settings.richardson_levels,
        workers=settings.workers,
    )
    full = result.jacobian[:n_dof]
    dipole_jacobian = result.jacobian[n_dof:]
    nuclear = slice(0, n_nuclear)
    photon = slice(n_nuclear, n_dof)

    asymmetry = {
        "rr": _block_asymmetry(full, nuclear, nuclear),
        "qq": _block_asymmetry(full, photon, photon),
        "qr": _block_asymmetry(full, photon, nuclear),
    }
    for block, value in asymmetry.items():
        logger.debug("Force-constant block %s relative asymmetry %.2e", block, value)
    if settings.symmetrize:
        full = 0.5 * (full + full.T)

    error = result.error
    error_estimate = {
        "c_rr": float(np.max(error[nuclear, nuclear], initial=0.0)),
        "c_qq": float(np.max(error[photon, photon], initial=0.0)),
        "c_qr": float(np.max(error[photon, nuclear], initial=0.0)),
        "dmu_dr": float(np.max(error[n_dof:, nuclear], initial=0.0)),
        "dmu_dq": float(np.max(error[n_dof:, photon], initial=0.0)),
    }

    return ForceConstantSet(
        c_rr=full[nuclear, nuclear].copy(),
        c_qq=full[photon, photon].copy(),
        c_qr=full[photon, nuclear].copy(),
        dmu_dr=dipole_jacobian[:, nuclear].copy(),
        dmu_dq=dipole_jacobian[:, photon].copy(),
        equilibrium=equilibrium,
        settings=settings,
        asymmetry=asymmetry,
        error_estimate=error_estimate,
    )


def generalized_force_constant_matrix(fcs: ForceConstantSet) -> FloatArray:
    """Return C~ = [[C_RR, C_qR^T], [C_qR, C_qq]]."""
    return np.block([[fcs.c_rr, fcs.c_qr.T], [fcs.c_qr, fcs.c_qq]])


@dataclass(frozen=True, slots=True)
class PhotonCouplingReport:
    """Largest photon-photon force constant off the diagonal."""

    max_offdiagonal: float
    coupled: bool


def photon_photon_block_check(
    fcs: ForceConstantSet, tolerance: float = _PHOTON_COUPLING_TOLERANCE
) -> PhotonCouplingReport:
    """Report whether photon modes couple through the electronic response.

    With no electronic polarizability the C_qq block is diagonal.
    """
    if fcs.n_photons < 2:
        return PhotonCouplingReport(max_offdiagonal=0.0, coupled=False)
    offdiagonal = fcs.c_qq - np.diag(np.diag(fcs.c_qq))
    largest = float(np.max(np.abs(offdiagonal)))
    scale = float(np.max(np.abs(np.diag(fcs.c_qq))))
    return PhotonCouplingReport(
        max_offdiagonal=largest, coupled=largest > tolerance * scale
    )


def translational_sum_rule_residual(fcs: ForceConstantSet) -> float:
    """Return max |sum_J C_RR[(I,k),(J,k')]| over all I, k, k'.

    Rigid translations cost no energy, so each atom row block sums to zero
    when the surface is translation invariant.
    """
    n_atoms = fcs.n_nuclear // 3
    blocks = fcs.c_rr.reshape(n_atoms, 3, n_atoms, 3)
    return float(np.max(np.abs(blocks.sum(axis=2))))


def force_constants_to_dict(fcs: ForceConstantSet) -> dict[str, Any]:
    """Serialize a force-constant set to JSON-ready data."""
    settings = fcs.settings
    return {
        "equilibrium": {
            "positions": fcs.equilibrium.positions.tolist(),
            "photon": fcs.equilibrium.photon.tolist(),
            "energy": fcs.equilibrium.energy,
        },
        "c_rr": fcs.c_rr.tolist(),
        "c_qq": fcs.c_qq.tolist(),
        "c_qr": fcs.c_qr.tolist(),
        "dmu_dr": fcs.dmu_dr.tolist(),
        "dmu_dq": fcs.dmu_dq.tolist(),
        "finite_difference": {
            "nuclear_step": settings.nuclear_step,
            "photon_step": settings.photon_step,
            "richardson_levels": settings.richardson_levels,
            "symmetrize": settings.symmetrize,
            "workers": settings.workers,
        },
        "asymmetry": dict(fcs.asymmetry),
        "error_estimate": dict(fcs.error_estimate),
    }


def _matrix(data: dict[str, Any], key: str, shape: tuple[int, int]) -> FloatArray:
    try:
        value = np.asarray(data[key], dtype=float).reshape(shape)
    except KeyError as exc:
        raise ConfigError(f"force-constant file is missing '{key}'") from exc
    except ValueError as exc:
        raise ConfigError(f"'{key}' does not have shape {shape}") from exc
    if not np.all(np.isfinite(value)):
        raise NonFiniteValueError(f"'{key}' contains non-finite values")
    return value


def force_constants_from_dict(
    data: dict[str, Any], system: CoupledSystem
) -> ForceConstantSet:
    """Load a force-constant set written by force_constants_to_dict."""
    n, p = system.n_nuclear, system.n_photons
    try:
        equilibrium_data = data["equilibrium"]
        equilibrium = Equilibrium(
            positions=np.asarray(equilibrium_data["positions"], dtype=float),
            photon=np.asarray(equilibrium_data["photon"], dtype=float),
            energy=float(equilibrium_data["energy"]),
        )
        settings = FDSettings(**data.get("finite_difference", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"force-constant file is malformed: {exc}") from exc

    return ForceConstantSet(
        c_rr=_matrix(data, "c_rr", (n, n)),
        c_qq=_matrix(data, "c_qq", (p, p)),
        c_qr=_matrix(data, "c_qr", (p, n)),
        dmu_dr=_matrix(data, "dmu_dr", (3, n)),
        dmu_dq=_matrix(data, "dmu_dq", (3, p)),
        equilibrium=equilibrium,
        settings=settings,
        asymmetry={k: float(v) for k, v in data.get("asymmetry", {}).items()},
        error_estimate={k: float(v) for k, v in data.get("error_estimate", {}).items()},
    )
