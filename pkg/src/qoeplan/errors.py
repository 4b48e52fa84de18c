"""Exception hierarchy shared across the planner."""


class QoePlanError(ValueError):
    """Base class for every error raised by this package."""


class TraceError(QoePlanError):
    pass


class MissingColumn(TraceError):
    pass


class NonContiguousEpochs(TraceError):
    pass


class NegativeValue(TraceError):
    pass


class EmptyTrace(TraceError):
    pass


class EpochOutOfRange(QoePlanError):
    pass


class PrefixTooShort(QoePlanError):
    pass


class DivergedTraining(QoePlanError):
    pass


class NonpositiveScale(QoePlanError):
    pass


class WeightsNotNormalized(QoePlanError):
    pass


class LengthMismatch(QoePlanError):
    pass


class InfeasibleProblem(QoePlanError):
    """Budget cannot cover every model at its base epoch count."""

    def __init__(self, message: str, min_budget_hours: float | None = None):
        super().__init__(message)
        self.min_budget_hours = min_budget_hours


class GridTooLarge(QoePlanError):
    pass
