"""Exception hierarchy shared by all viabkernel modules."""


class ViabilityError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ViabilityError, ValueError):
    """Invalid parameters or thresholds. ``violations`` lists each failed constraint."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ModelEvaluationError(ViabilityError, ArithmeticError):
    """A growth coefficient evaluated to a non-finite value."""

    def __init__(self, message, state=None, control=None):
        self.state = state
        self.control = control
        super().__init__(f"{message} (state={state}, control={control})")


class PreconditionError(ViabilityError):
    """A closed form was requested outside the hypotheses that make it valid."""


class NoSolutionError(ViabilityError):
    """No effort solves the requested equation (state outside the kernel)."""


class ModelContractError(ViabilityError):
    """A growth model violates one of its declared properties."""


class PolicyError(ViabilityError):
    """A feedback policy was queried at a state outside its kernel."""


class DataError(ViabilityError, ValueError):
    """Malformed or inconsistent observation data."""


class ConfigError(ViabilityError, ValueError):
    """Malformed run configuration."""
