"""Exception hierarchy shared by the kernel, engine, theory and CLI layers."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .kernel import AssumptionReport


class LinGrowthError(Exception):
    """Base class for every error raised by lingrowth."""


class InvalidParameterError(LinGrowthError, ValueError):
    """Raised when a constructor or operation receives an out-of-range value."""


class DegenerateKernelError(InvalidParameterError):
    """Raised when the mean kernel has no mass off the origin (|k| = k_0)."""


class InvalidStateError(LinGrowthError, RuntimeError):
    """Raised when an operation is applied to a configuration that cannot take it."""


class DivergentGreenFunctionError(LinGrowthError, ValueError):
    """Raised when a Green function is requested for a recurrent walk (d <= 2)."""


class ConditionNotSatisfiedError(LinGrowthError, ValueError):
    """Raised when a construction needs a criterion that does not hold."""


class AssumptionError(InvalidParameterError):
    """Raised when a kernel law violates one or more standing assumptions."""

    def __init__(self, report: "AssumptionReport") -> None:
        self.report = report
        names = ", ".join(report.failed) or "unknown"
        super().__init__(f"kernel violates standing assumptions: {names}")


class ConfigError(LinGrowthError, ValueError):
    """Raised for run-configuration schema violations.

    ``pointer`` is the JSON pointer (RFC 6901) of the offending value.
    """

    def __init__(self, pointer: str, message: str) -> None:
        self.pointer = pointer or "/"
        self.message = message
        super().__init__(f"{self.pointer}: {message}")


__all__ = [
    "LinGrowthError",
    "InvalidParameterError",
    "DegenerateKernelError",
    "InvalidStateError",
    "DivergentGreenFunctionError",
    "ConditionNotSatisfiedError",
    "AssumptionError",
    "ConfigError",
]
