"""Exception types raised by the laboratory."""


class DriftPlateError(Exception):
    """Base class for all pipeline errors."""


class SingularMetric(DriftPlateError):
    """Induced metric is degenerate (or numerically so) at a chart point."""


class EmptyInterior(DriftPlateError):
    pass


class IndefiniteMass(DriftPlateError):
    pass


class NoConvergence(DriftPlateError):
    """Solver or extrapolation failed to reach the requested tolerance.

    ``partial`` carries whatever result was obtained, if any.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ZeroVector(DriftPlateError):
    pass


class InsufficientSpectrum(DriftPlateError):
    pass


class NotATranslator(DriftPlateError):
    pass


class VariantMismatch(DriftPlateError):
    pass


class ConfigError(DriftPlateError):
    pass


class RankDeficiencyWarning(UserWarning):
    """Gram-Schmidt input matrix is numerically rank deficient."""
