"""Exception hierarchy shared by the solver stack and the RHY model."""


class BcrError(Exception):
    """Base class for all package errors."""


class MalformedProgram(BcrError):
    pass


class NumericalBreakdown(BcrError):
    pass


class LimitExceeded(BcrError):
    """A node or time limit stopped branch-and-bound.

    ``incumbent`` is the best integer-feasible vector found, or None.
    """

    def __init__(self, message, incumbent=None, objective=None):
        super().__init__(message)
        self.incumbent = incumbent
        self.objective = objective


class EnumerationTooLarge(BcrError):
    pass


class InfeasibleModel(BcrError):
    pass


class IterationLimit(BcrError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DenominatorViolation(BcrError):
    pass


class InfeasiblePoint(BcrError):
    pass


class NonpositiveDenominator(BcrError):
    pass


class InfeasibleWindow(BcrError):
    pass


class MissingParameter(BcrError):
    pass


class InfeasibleLambda(BcrError):
    pass


class DimensionMismatch(BcrError):
    pass


class OutOfWindow(BcrError):
    pass


class NotACandidate(BcrError):
    pass


class ConfigInvalid(BcrError):
    pass


class InstanceValidationError(BcrError):
    pass


class SchemaVersionMismatch(BcrError):
    pass


class ScenarioError(BcrError):
    """Solver failure annotated with the scenario that triggered it."""

    def __init__(self, message, scenario=None, stage=None):
        super().__init__(message)
        self.scenario = scenario
        self.stage = stage


class MonotonicityViolation(BcrError):
    """An exact-solve sweep broke a trend that must hold."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)
