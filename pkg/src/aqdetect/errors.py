"""Exception hierarchy shared across the package."""


class AqError(Exception):
    """Base class for all domain errors."""


class EmptySeries(AqError):
    pass


class GranularityMismatch(AqError):
    pass


class UnimputableColumn(AqError):
    pass


class EmptyFitRange(AqError):
    pass


class SeriesTooShort(AqError):
    pass


class NonFiniteInput(AqError):
    pass


class TrainingDiverged(AqError):
    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training loss became non-finite at epoch {epoch}")


class ShapeMismatch(AqError):
    pass


class WindowTooShort(AqError):
    pass


class DegenerateWindow(AqError):
    pass


class UnknownDataset(AqError):
    pass


class IngestConflict(AqError):
    pass


class NotFound(AqError):
    pass


class InvalidConfig(AqError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
