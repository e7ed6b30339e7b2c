from __future__ import annotations

import json
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from cavmodes.analytic import AnalyticSurface, PolarizableMoleculeSpec
from cavmodes.models import Atom, CoupledSystem, PhotonMode
from cavmodes.system import validate_system

BOND = 2.2
STRETCH_K = 0.975
BEND_K = 0.0367
Z_CARBON = 0.8
Z_OXYGEN = -0.4
DIATOMIC_K = 0.35


def co2_atoms() -> tuple[Atom, ...]:
    return (
        Atom.from_amu("O", 16.0, Z_OXYGEN, [0.0, 0.0, -BOND]),
        Atom.from_amu("C", 12.0, Z_CARBON, [0.0, 0.0, 0.0]),
        Atom.from_amu("O", 16.0, Z_OXYGEN, [0.0, 0.0, BOND]),
    )


def co2_asym_omega() -> float:
    """Bare antisymmetric-stretch frequency of the CO2 analogue (Hartree)."""
    oxygen, carbon, _ = co2_atoms()
    return float(np.sqrt(STRETCH_K * (1.0 / oxygen.mass + 2.0 / carbon.mass)))


def co2_sym_omega() -> float:
    oxygen = co2_atoms()[0]
    return float(np.sqrt(STRETCH_K / oxygen.mass))


def co2_force_constants() -> np.ndarray:
    chain = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    bend = np.array([1.0, -2.0, 1.0])
    k = np.zeros((9, 9))
    for axis in (0, 1):
        index = np.arange(3) * 3 + axis
        k[np.ix_(index, index)] = BEND_K * np.outer(bend, bend)
    stretch = np.arange(3) * 3 + 2
    k[np.ix_(stretch, stretch)] = STRETCH_K * chain
    return k


def make_system(
    atoms: tuple[Atom, ...],
    couplings: Sequence[float],
    omegas: Sequence[float],
    directions: Sequence[Sequence[float]] | None = None,
) -> CoupledSystem:
    directions = directions or [(0.0, 0.0, 1.0)] * len(couplings)
    modes = tuple(
        PhotonMode(
            omega=omega,
            lambda_vec=coupling * np.asarray(direction, dtype=float),
            polarization=np.asarray(direction, dtype=float),
        )
        for coupling, omega, direction in zip(
            couplings, omegas, directions, strict=True
        )
    )
    return validate_system(CoupledSystem(atoms=atoms, photon_modes=modes))


def polarizable_spec(
    system: CoupledSystem,
    force_constants: np.ndarray,
    polarizability: float,
    transfer_scale: float,
    cubic: np.ndarray | None = None,
) -> PolarizableMoleculeSpec:
    return PolarizableMoleculeSpec(
        reference_geometry=system.positions,
        force_constants=force_constants,
        polarizability=polarizability * np.eye(3),
        charge_transfer=transfer_scale * system.charge_matrix,
        static_dipole=np.zeros(3),
        cubic=cubic,
    )


@pytest.fixture
def co2_surface() -> Callable[..., AnalyticSurface]:
    """Factory for the CO2 analogue coupled along z at the asymmetric stretch."""

    def build(
        coupling: float = 0.05,
        polarizability: float = 10.0,
        transfer_scale: float = 0.2,
        omegas: Sequence[float] | None = None,
        couplings: Sequence[float] | None = None,
        directions: Sequence[Sequence[float]] | None = None,
    ) -> AnalyticSurface:
        omegas = list(omegas) if omegas is not None else [co2_asym_omega()]
        if couplings is None:
            couplings = [coupling] * len(omegas)
        system = make_system(co2_atoms(), couplings, omegas, directions)
        spec = polarizable_spec(
            system, co2_force_constants(), polarizability, transfer_scale
        )
        return AnalyticSurface(spec, system)

    return build


def diatomic_atoms() -> tuple[Atom, ...]:
    return (
        Atom.from_amu("A", 12.0, 0.5, [0.0, 0.0, 0.0]),
        Atom.from_amu("B", 16.0, -0.5, [0.0, 0.0, 2.0]),
    )


def diatomic_omega() -> float:
    first, second = diatomic_atoms()
    return float(np.sqrt(DIATOMIC_K * (1.0 / first.mass + 1.0 / second.mass)))


def diatomic_force_constants() -> np.ndarray:
    k = np.zeros((6, 6))
    k[np.ix_([2, 5], [2, 5])] = DIATOMIC_K * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return k


@pytest.fixture
def diatomic_surface() -> Callable[..., AnalyticSurface]:
    """Factory for a polar diatomic along z with one resonant photon mode."""

    def build(
        coupling: float = 0.05,
        polarizability: float = 5.0,
        transfer_scale: float = 0.1,
        detuning: float = 1.0,
        cubic: np.ndarray | None = None,
    ) -> AnalyticSurface:
        system = make_system(
            diatomic_atoms(), [coupling], [detuning * diatomic_omega()]
        )
        spec = polarizable_spec(
            system, diatomic_force_constants(), polarizability, transfer_scale, cubic
        )
        return AnalyticSurface(spec, system)

    return build


def co2_config_data(**sections: Any) -> dict[str, Any]:
    """Return a complete CO2-analogue run config as a dictionary."""
    atoms = [
        {
            "label": atom.label,
            "mass": mass,
            "charge": atom.charge,
            "position": atom.position.tolist(),
        }
        for atom, mass in zip(co2_atoms(), (16.0, 12.0, 16.0), strict=True)
    ]
    data: dict[str, Any] = {
        "format": 1,
        "system": {
            "atoms": atoms,
            "photon_modes": [
                {
                    "omega_hartree": co2_asym_omega(),
                    "lambda": [0.0, 0.0, 0.05],
                    "polarization": [0.0, 0.0, 1.0],
                }
            ],
        },
        "backend": {
            "kind": "polarizable",
            "polarizable": {
                "force_constants": co2_force_constants().tolist(),
                "polarizability": 10.0,
                "charge_transfer_scale": 0.2,
            },
        },
        "numerics": {"spectrum": {"broadening_cm1": 10.0}},
    }
    data.update(sections)
    return data


def write_config(path: Path, data: dict[str, Any]) -> Path:
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path
