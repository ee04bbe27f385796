"""Exception hierarchy. Every error carries the module and operation it came from."""


class TwmError(Exception):
    """Base class for all simulator errors."""

    module = "twmsim"

    def __init__(self, message, *, operation=None, key=None):
        super().__init__(message)
        self.operation = operation
        self.key = key

    def diagnostic(self):
        return {
            "error": type(self).__name__,
            "module": self.module,
            "operation": self.operation,
            "key": self.key,
            "message": str(self),
        }


class InvalidGridError(TwmError, ValueError):
    module = "dispersion"


class MalformedTableError(TwmError, ValueError):
    module = "dispersion"


class ExtrapolationError(TwmError, ValueError):
    module = "dispersion"


class InconsistentBandsError(TwmError, ValueError):
    module = "dispersion"


class QuadratureError(TwmError, RuntimeError):
    module = "pump"


class InvalidLossError(TwmError, ValueError):
    module = "pump"


class UndefinedOverlapError(TwmError, ValueError):
    module = "pump"


class InvalidPatternError(TwmError, ValueError):
    module = "nonlinearity"


class InfeasibleApodizationError(TwmError, ValueError):
    module = "nonlinearity"


class OverBroadeningError(TwmError, ValueError):
    module = "nonlinearity"


class OutOfRangeError(TwmError, ValueError):
    module = "nonlinearity"


class InvalidModeError(TwmError, ValueError):
    module = "nonlinearity"


class CoverageError(TwmError, ValueError):
    module = "propagator"


class NumericError(TwmError, ArithmeticError):
    module = "propagator"


class MeshError(TwmError, ValueError):
    module = "propagator"


class OracleUnconvergedError(TwmError, RuntimeError):
    module = "propagator"


class DegenerateLossError(TwmError, ValueError):
    module = "propagator"


class KindMismatchError(TwmError, TypeError):
    module = "analysis"


class UndefinedFigureError(TwmError, ValueError):
    module = "analysis"


class ConfigError(TwmError, ValueError):
    module = "config"
