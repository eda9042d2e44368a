"""
Domain-specific exceptions for the symplectic laboratory.
"""

COMPUTATION_EXIT_CODE = 1
USAGE_EXIT_CODE = 2


class SymplecticLabError(Exception):
    """Base exception for all laboratory errors."""
    default_message = "An error occurred in the symplectic laboratory"
    error_code = "LAB_ERROR"
    exit_code = COMPUTATION_EXIT_CODE

    def __init__(self, message=None, error_code=None, **context):
        self.message = message or self.default_message
        self.error_code = error_code or self.error_code
        self.context = context
        super().__init__(self.message)


class DomainError(SymplecticLabError):
    """Raised when a parameter lies outside an operation's domain."""
    default_message = "Parameter outside the domain of the operation"
    error_code = "DOMAIN_ERROR"


class SingularityError(SymplecticLabError):
    """Raised when a force evaluation is not finite (e.g. Kepler at r = 0)."""
    default_message = "Non-finite force evaluation"
    error_code = "SINGULARITY"

    @property
    def stage_index(self):
        return self.context.get('stage_index')

    @property
    def step_index(self):
        return self.context.get('step_index')


class SchemeValidationError(SymplecticLabError):
    """Raised when a scheme or scheme document violates an invariant."""
    default_message = "Scheme failed validation"
    error_code = "SCHEME_INVALID"

    @property
    def invariant(self):
        return self.context.get('invariant')


class InstabilityError(SymplecticLabError):
    """Raised when the step size lies beyond the stability limit."""
    default_message = "Step size beyond the stability limit (|trace|/2 > 1)"
    error_code = "UNSTABLE"


class ExtractionError(SymplecticLabError):
    """Raised when a ladder fit of series coefficients does not settle."""
    default_message = "Series coefficients did not converge over the step ladder"
    error_code = "EXTRACTION_FAILED"


class PoleError(SymplecticLabError):
    """Raised at a root of the correctable-alpha denominator."""
    default_message = "Correctable alpha has a pole at this t0"
    error_code = "POLE"


class CapabilityError(SymplecticLabError):
    """Raised when an input lacks what an operation needs."""
    default_message = "Operation not supported for this input"
    error_code = "CAPABILITY"


class DegenerateOrbitError(SymplecticLabError):
    """Raised when the Laplace-Runge-Lenz vector vanishes."""
    default_message = "Circular orbit: the LRL vector is zero and its angle undefined"
    error_code = "DEGENERATE_ORBIT"


class ForceModelError(SymplecticLabError):
    """Raised when force callbacks disagree with finite differences."""
    default_message = "Force model failed its finite-difference consistency check"
    error_code = "FORCE_MODEL_INVALID"


class ConfigurationError(SymplecticLabError):
    """Raised when a run configuration is invalid."""
    default_message = "Invalid run configuration"
    error_code = "USAGE_ERROR"
    exit_code = USAGE_EXIT_CODE
