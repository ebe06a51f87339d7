"""Exception hierarchy and non-error outcomes shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


class ConwayError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(ConwayError, ValueError):
    """Input lies outside the domain of the requested operation."""


class UnsupportedFragmentError(ConwayError):
    """Input is mathematically meaningful but outside the implemented fragment."""


class RepresentationError(UnsupportedFragmentError):
    """A scalar result cannot be written exactly with the registered constants."""


class ResourceError(ConwayError):
    """A configured cap (nesting depth, term count) was exceeded."""

    def __init__(self, message: str, *, cap_name: str, cap_value: int) -> None:
        super().__init__(message)
        self.cap_name = cap_name
        self.cap_value = cap_value


class DepthCapError(ResourceError):
    """Exponent nesting deeper than the configured depth cap."""


class TermCapError(ResourceError):
    """A lazy computation needed more terms than the configured term cap."""


class UndecidableSignError(ConwayError, ArithmeticError):
    """Sign of a scalar could not be certified at the working precision."""


class PadeRankError(ConwayError, ArithmeticError):
    """Padé linear system is rank deficient at every admissible order."""


class PoleOnPathError(DomainError):
    """A continuation pole sits on the positive real integration path."""


class NotGevrey1Error(ConwayError):
    """Coefficients are not bounded by C * rho**-k * k! on the inspected window."""


class NotApplicableError(ConwayError):
    """The requested constant diverges on the supplied grid."""


class ParseError(ConwayError):
    """Syntax error in the text front end, with a source position."""

    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col


class NeedsMoreTermsError(ConwayError):
    """Raised by front ends when a computation returned NeedsMoreTerms."""

    def __init__(self, outcome: "NeedsMoreTerms") -> None:
        super().__init__(outcome.reason)
        self.outcome = outcome


@dataclass(frozen=True)
class NeedsMoreTerms:
    """A lazy check could not be decided on the inspected prefix.

    This is an outcome, not an error: the caller may refine the input and retry.
    """

    reason: str
    inspected: int = 0

    def __bool__(self) -> bool:
        return False
