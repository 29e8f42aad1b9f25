"""Exception hierarchy.

Every error raised on purpose by the library derives from ``PinlayerError`` so
the CLI can turn it into a structured error record with a stable ``kind``.
"""


class PinlayerError(Exception):
    """Base class. ``details`` is a JSON-serialisable dict of context."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    @property
    def kind(self):
        return type(self).__name__

    def to_dict(self):
        return {"kind": self.kind, "message": str(self), "details": self.details}


class ModelError(PinlayerError):
    """Invalid model construction (e.g. a degenerate coupling)."""


class BistabilityLost(PinlayerError):
    """Fewer than three roots of f(., v) were found on the scan grid."""


class NoBalancedState(PinlayerError):
    """J(v) has no sign change on the admissible interval."""


class DegenerateBalance(PinlayerError):
    """|J'(v*)| is too small for a nondegenerate balanced state."""


class UnbalancedFront(PinlayerError):
    """The front potential became negative, i.e. J(v*) is not zero."""


class MassOutOfRange(PinlayerError):
    """The prescribed mass does not admit a single interior layer."""


class NoConvergence(PinlayerError):
    """Newton iteration did not reach the tolerance."""


class JacobianSingular(PinlayerError):
    """Singular Newton system, or the layer collapsed onto the boundary."""


class FactorizationFailed(PinlayerError):
    """Shift-invert factorization failed for every attempted shift."""


class StiffnessOverflow(PinlayerError):
    """The shooting integrator could not resolve the linearized system."""


class NoZeroFound(PinlayerError):
    """Evans zero search left its trust region or did not converge."""


class ResonantDenominator(PinlayerError):
    """f_u - omega0 * lambda_hat vanished in the case-III reduction."""


class LinearSolveFailure(PinlayerError):
    """A banded solve in the time stepper failed."""


class WindowNotFound(PinlayerError):
    """No time window with a clean exponential trend was found."""


class ConfigError(PinlayerError):
    """Base for configuration problems."""


class ParseError(ConfigError):
    """Malformed configuration file (carries line and column)."""


class ValidationError(ConfigError):
    """Well-formed configuration with unknown or invalid keys."""
