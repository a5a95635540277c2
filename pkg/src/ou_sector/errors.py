"""Exception hierarchy shared by the numerical kernels and the CLI."""

from __future__ import annotations

from typing import Any


class OuSectorError(ValueError):
    """Base class for every error raised by ou-sector."""


class DimensionError(OuSectorError):
    """Raised when matrix or vector shapes do not fit together."""


class StabilityError(OuSectorError):
    """Raised when a drift matrix has an eigenvalue with real part >= -1e-12."""

    def __init__(self, eigenvalue: complex) -> None:
        self.eigenvalue = complex(eigenvalue)
        super().__init__(
            f"Drift matrix is not stable: eigenvalue {self.eigenvalue.real:.6g}"
            f"{self.eigenvalue.imag:+.6g}j has nonnegative real part."
        )


class DefinitenessError(OuSectorError):
    """Raised when a matrix that must be symmetric positive definite is not."""


class DomainError(OuSectorError):
    """Raised when a scalar argument lies outside its admissible range."""


class AccuracyError(OuSectorError):
    """Raised when an internal consistency check misses its tolerance."""


class ConditioningError(OuSectorError):
    """Raised when a Gram matrix is too ill-conditioned to factor."""


class EvaluationError(OuSectorError):
    """Raised when an integrand returns a non-finite value."""

    def __init__(self, point: Any, value: Any) -> None:
        self.point = point
        self.value = value
        super().__init__(f"Integrand is not finite at x={point!r} (value {value!r}).")


class ConfigError(OuSectorError):
    """Raised by parse_config with every problem found in the file."""

    def __init__(self, messages: list[str]) -> None:
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))
