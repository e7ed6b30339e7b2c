"""Central differences with Richardson extrapolation."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteValueError
from .models import FloatArray

logger = logging.getLogger(__name__)

# Central differences have leading error h^2.
_CENTRAL_ORDER = 2


def richardson_extrapolate(
    base_values: Sequence[FloatArray], p: int = _CENTRAL_ORDER, r: float = 2.0
) -> tuple[FloatArray, FloatArray]:
    """Extrapolate approximations taken at steps h, h/r, h/r^2, ...

    Returns the extrapolated value and an error estimate: the difference
    between the best and the second-best extrapolant (zeros for one level).
    """
    values = [np.asarray(value, dtype=float) for value in base_values]
    if len(values) == 1:
        return values[0], np.zeros_like(values[0])

    previous = values[-2]
    for j in range(1, len(values)):
        factor = r ** (p * j)
        for k in range(len(values) - 1, j - 1, -1):
            values[k] = (factor * values[k] - values[k - 1]) / (factor - 1.0)
        if j == len(values) - 2:
            previous = values[-1].copy()
    return values[-1], np.abs(values[-1] - previous)


@dataclass(frozen=True, slots=True, eq=False)
class JacobianResult:
    """Jacobian columns with per-entry error estimates."""

    jacobian: FloatArray
    error: FloatArray


def central_difference_jacobian(
    func: Callable[[FloatArray], FloatArray],
    point: FloatArray,
    steps: FloatArray,
    levels: int = 2,
    workers: int = 1,
) -> JacobianResult:
    """Differentiate a vector function column by column.

    Column j uses displacements +-steps[j] / 2^k for k < levels. Columns are
    independent and may be evaluated on ``workers`` threads; results are
    placed by column index so the output never depends on scheduling.
    """
    point = np.asarray(point, dtype=float)

    def column(j: int) -> tuple[FloatArray, FloatArray]:
        estimates = []
        for level in range(levels):
            step = steps[j] / 2**level
            shift = np.zeros_like(point)
            shift[j] = step
            estimates.append((func(point + shift) - func(point - shift)) / (2.0 * step))
        return richardson_extrapolate(estimates)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            columns = list(executor.map(column, range(point.shape[0])))
    else:
        columns = [column(j) for j in range(point.shape[0])]

    jacobian = np.column_stack([value for value, _ in columns])
    error = np.column_stack([estimate for _, estimate in columns])
    if not np.all(np.isfinite(jacobian)):
        raise NonFiniteValueError("finite-difference derivative is not finite")
    logger.debug(
        "Differentiated %d columns (levels=%d, workers=%d)",
        point.shape[0],
        levels,
        workers,
    )
    return JacobianResult(jacobian=jacobian, error=error)
