"""Exception types raised across the toolkit."""


class ModelValidationError(ValueError):
    """A FritchmanModel broke one or more structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(v.message for v in self.violations)
        super().__init__(f"invalid Fritchman model: {lines}")


class NonConvergenceError(RuntimeError):
    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"power iteration did not converge after {iterations} iterations "
            f"(residual {residual:.3e}); chain may be reducible"
        )


class ImpossibleObservationError(ValueError):
    """The model assigns zero probability to the observation at step ``t`` (1-based)."""

    def __init__(self, t):
        self.t = t
        super().__init__(f"observation at t={t} is impossible under the model")


class DegenerateSequenceError(ValueError):
    pass


class UndefinedEfrdError(ValueError):
    pass


class DegenerateMeasurementError(ValueError):
    pass


class ConfigError(ValueError):
    """Bad or missing key in a text config/model/spec file."""

    def __init__(self, key, reason):
        self.key = key
        super().__init__(f"{key}: {reason}")
