"""Exception types shared across the package.

Each class carries a short ``category`` string that the CLI reports on
failure, so scripts can branch on the kind of error without parsing text.
"""


class SpinOttoError(Exception):
    category = "error"


class DomainError(SpinOttoError, ValueError):
    """An argument lies outside the physically meaningful domain."""

    category = "domain"


class ClosureError(SpinOttoError, RuntimeError):
    """Cooling never brought the ground state back within the horizon."""

    category = "closure"


class CalibrationError(SpinOttoError, RuntimeError):
    category = "calibration"


class FitError(SpinOttoError, RuntimeError):
    """No start of the multi-start fit converged.

    ``best_residual`` holds the smallest residual that was seen, or ``inf``.
    """

    category = "fit"

    def __init__(self, message, best_residual=float("inf")):
        super().__init__(message)
        self.best_residual = best_residual


class ConfigError(SpinOttoError, ValueError):
    category = "config"

    def __init__(self, message, key=None, line=None):
        where = ""
        if key is not None:
            where += f" [key '{key}']"
        if line is not None:
            where += f" [line {line}]"
        super().__init__(message + where)
        self.key = key
        self.line = line
