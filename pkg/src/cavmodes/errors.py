"""Custom error types for cavmodes."""


class CavmodesError(Exception):
    """Base exception for user-facing cavmodes errors."""

    exit_code = 2


class ConfigError(CavmodesError):
    """Raised when a run config is missing or invalid."""


class SystemValidationError(CavmodesError):
    """Raised when a coupled system definition is malformed."""


class EmptySystemError(SystemValidationError):
    """Raised when a system has no atoms."""


class PartitionError(SystemValidationError):
    """Raised when the molecule partition has a gap or an overlap."""


class NonpositiveMassError(SystemValidationError):
    """Raised when an atom mass is not strictly positive."""


class NonpositiveOmegaError(SystemValidationError):
    """Raised when a photon mode frequency is not strictly positive."""


class UnknownUnitError(CavmodesError):
    """Raised when a frequency unit is not recognized."""


class DimensionMismatchError(CavmodesError):
    """Raised when array shapes disagree with the owning system."""


class BackendError(CavmodesError):
    """Base class for energy-surface evaluation failures."""


class BackendRefusedError(BackendError):
    """Raised when a configuration lies outside the backend trust radius."""


class SingularElectronicProblemError(BackendError):
    """Raised when the electronic dipole minimization has no unique solution."""


class OutOfHullError(BackendError):
    """Raised when a grid query lies outside the tabulated displacements."""


class BackendLacksForceSplitError(BackendError):
    """Raised when a backend cannot separate the cavity coupling force."""


class MaxIterationsExceededError(CavmodesError):
    """Raised when relaxation does not reach the force tolerance."""


class NonFiniteValueError(CavmodesError):
    """Raised when a backend returns NaN or infinite values."""


class NonSymmetricInputError(CavmodesError):
    """Raised when a force-constant matrix is not symmetric."""


class EigenSolverFailureError(CavmodesError):
    """Raised when the symmetric eigensolver does not converge."""

    exit_code = 1


class MissingDipoleDerivativesError(CavmodesError):
    """Raised when mode effective charges are requested without dipole data."""


class NonpositiveBroadeningError(CavmodesError):
    """Raised when a spectrum broadening is not strictly positive."""


class NonOrthogonalBasisError(CavmodesError):
    """Raised when a rotation basis is not orthogonal."""


class InconsistentScalingError(CavmodesError):
    """Raised when collective coupling strengths violate the sqrt(N) scaling."""


class NotTwoModeError(CavmodesError):
    """Raised when parameters cannot be reduced to one vibration and one photon."""
