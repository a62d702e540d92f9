"""
Exceptions raised by the qimpc package
"""


class QimpcError(Exception):
    """
    Base class of every error raised on purpose by this package
    """


class ConfigurationError(QimpcError, ValueError):
    pass


class PreconditionError(QimpcError, ValueError):
    pass


class OracleSizeError(QimpcError):
    pass


class UnsupportedModeError(QimpcError):
    pass


class NumericalError(QimpcError, ArithmeticError):
    pass


class PlantSingularityError(QimpcError):
    pass


class RunAbortedError(QimpcError):
    """
    A control loop stopped before its last step. `log` holds every record
    written before the failure, the failure itself is chained as __cause__.
    """

    def __init__(self, message, log=None):
        super(RunAbortedError, self).__init__(message)
        self.log = log
