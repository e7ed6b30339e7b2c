"""Joint relaxation of nuclear and photon coordinates on a CBO surface."""

from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import minimize

from .errors import MaxIterationsExceededError
from .finite_difference import central_difference_jacobian
from .models import Equilibrium, FloatArray, RelaxationMethod, RelaxationSettings
from .surface import CBOSurface

logger = logging.getLogger(__name__)

_HESSIAN_STEP = 1e-3
_EIGEN_CUTOFF = 1e-10


def _max_force(gradient: FloatArray) -> float:
    return float(np.max(np.abs(gradient))) if gradient.size else 0.0


def _equilibrium(
    surface: CBOSurface, flat: FloatArray, energy: float, iterations: int, force: float
) -> Equilibrium:
    positions, photon = surface.system.split(flat)
    return Equilibrium(
        positions=positions.copy(),
        photon=photon.copy(),
        energy=energy,
        iterations=iterations,
        max_force=force,
    )


def _initial_hessian(surface: CBOSurface, flat: FloatArray) -> FloatArray:
    """Finite-difference Hessian from forces, symmetrized."""
    steps = np.full(flat.shape[0], _HESSIAN_STEP)
    result = central_difference_jacobian(
        lambda x: surface.evaluate_flat(x).gradient(), flat, steps, levels=1
    )
    return 0.5 * (result.jacobian + result.jacobian.T)


def _newton_step(hessian: FloatArray, gradient: FloatArray) -> FloatArray:
    """Newton step with absolute eigenvalues; flat directions are skipped."""
    eigenvalues, vectors = np.linalg.eigh(hessian)
    scale = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    keep = np.abs(eigenvalues) > _EIGEN_CUTOFF * max(scale, 1.0)
    projected = vectors[:, keep].T @ gradient
    return -vectors[:, keep] @ (projected / np.abs(eigenvalues[keep]))


def _bfgs_update(
    hessian: FloatArray, step: FloatArray, change: FloatArray
) -> FloatArray:
    curvature = float(step @ change)
    if curvature <= 0.0:
        return hessian
    hs = hessian @ step
    return (
        hessian
        + np.outer(change, change) / curvature
        - np.outer(hs, hs) / float(step @ hs)
    )


def _relax_quasi_newton(
    surface: CBOSurface, settings: RelaxationSettings, start: FloatArray
) -> Equilibrium:
    flat = start.copy()
    point = surface.evaluate_flat(flat)
    gradient = point.gradient()
    hessian: FloatArray | None = None
    n_nuclear = surface.system.n_nuclear

    for iteration in range(settings.max_iterations + 1):
        force = _max_force(gradient)
        logger.debug(
            "Relaxation iteration %d: E=%.12f max|F|=%.3e",
            iteration,
            point.energy,
            force,
        )
        if force <= settings.force_tolerance:
            logger.info("Relaxation converged in %d iterations", iteration)
            return _equilibrium(surface, flat, point.energy, iteration, force)
        if iteration == settings.max_iterations:
            break

        if hessian is None:
            hessian = _initial_hessian(surface, flat)
        step = _newton_step(hessian, gradient)
        largest = float(np.max(np.abs(step[:n_nuclear]), initial=0.0))
        if largest > settings.initial_step:
            step *= settings.initial_step / largest

        flat = flat + step
        point = surface.evaluate_flat(flat)
        new_gradient = point.gradient()
        hessian = _bfgs_update(hessian, step, new_gradient - gradient)
        gradient = new_gradient

    raise MaxIterationsExceededError(
        f"relaxation did not converge in {settings.max_iterations} iterations "
        f"(max|F| = {_max_force(gradient):.3e}, "
        f"tolerance {settings.force_tolerance:.1e})"
    )


def _relax_scipy(
    surface: CBOSurface, settings: RelaxationSettings, start: FloatArray
) -> Equilibrium:
    point = surface.evaluate_flat(start)
    force = _max_force(point.gradient())
    if force <= settings.force_tolerance:
        return _equilibrium(surface, start, point.energy, 0, force)

    def objective(flat: FloatArray) -> tuple[float, FloatArray]:
        evaluated = surface.evaluate_flat(flat)
        return evaluated.energy, evaluated.gradient()

    result = minimize(
        objective,
        start,
        jac=True,
        method="BFGS",
        options={"gtol": settings.force_tolerance, "maxiter": settings.max_iterations},
    )
    final = surface.evaluate_flat(result.x)
    force = _max_force(final.gradient())
    if force > settings.force_tolerance:
        raise MaxIterationsExceededError(
            f"scipy BFGS stopped at max|F| = {force:.3e} "
            f"(tolerance {settings.force_tolerance:.1e}): {result.message}"
        )
    return _equilibrium(surface, result.x, final.energy, int(result.nit), force)


def relax(
    surface: CBOSurface,
    settings: RelaxationSettings | None = None,
    start: FloatArray | None = None,
) -> Equilibrium:
    """Find the joint minimum of E(R, q).

    Starts from ``start`` or from the system geometry with q = 0. A start
    that already satisfies the force tolerance is returned unchanged.
    """
    settings = settings or RelaxationSettings()
    initial = (
        surface.start_configuration() if start is None else np.asarray(start, float)
    )
    logger.info(
        "Relaxing %d coordinates with %s", initial.shape[0], settings.method.value
    )
    if settings.method is RelaxationMethod.SCIPY_BFGS:
        return _relax_scipy(surface, settings, initial)
    return _relax_quasi_newton(surface, settings, initial)
