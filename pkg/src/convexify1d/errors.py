"""Exception types raised by the reconstruction pipeline."""


class ConvexifyError(Exception):
    """Base class for all package errors."""


class ForwardSolverError(ConvexifyError):
    pass


class BasisConstructionError(ConvexifyError):
    pass


class DataError(ConvexifyError):
    """Measured data cannot be processed (e.g. a zero sample under the log)."""


class DataFormatError(DataError):
    pass


class LocationEstimateError(ConvexifyError):
    pass


class OptimizerInputError(ConvexifyError):
    pass


class StageError(ConvexifyError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
