"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A physical parameter or precondition is out of its valid domain."""


class IntegrationFailure(RuntimeError):
    """Density-matrix integration violated a state invariant mid-run."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class LinearizationError(ValidationError):
    """Strong-reference linearization does not hold for the requested scene."""


class EstimationError(RuntimeError):
    """Estimator failed on a degenerate or non-finite intermediate value."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class FeasibilityError(RuntimeError):
    """Constrained optimizer produced no feasible iterate."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ConfigError(ValueError):
    """Experiment configuration text could not be parsed or validated."""
