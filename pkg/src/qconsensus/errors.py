"""Exception types raised across the package."""


class QConsensusError(Exception):
    pass


class ParameterOutOfRange(QConsensusError, ValueError):
    pass


class NotSymmetric(QConsensusError, ValueError):
    pass


class DimensionMismatch(QConsensusError, ValueError):
    pass


class NonPositiveLogArgument(QConsensusError, ValueError):
    """The bit budget is too small for the topology to admit an exponential schedule.

    ``min_bits`` carries the smallest bit count for which the schedule exists.
    """

    def __init__(self, message, min_bits=None):
        super().__init__(message)
        self.min_bits = min_bits


class InfeasibleBits(QConsensusError):
    def __init__(self, message, n=None, min_bits=None):
        super().__init__(message)
        self.n = n
        self.min_bits = min_bits
