"""Exception hierarchy shared by all modules."""

from __future__ import annotations

from dataclasses import dataclass, field


class RomaError(Exception):
    """Base class for every error raised by this package."""


@dataclass
class ValidationResult:
    """Outcome of a structural check. Violations are data, not failures."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def extend(self, other: "ValidationResult", prefix: str = "") -> None:
        self.violations.extend(prefix + v for v in other.violations)


class ValidationError(RomaError, ValueError):
    def __init__(self, violations, context: str = ""):
        self.violations = list(violations)
        head = f"{context}: " if context else ""
        super().__init__(head + "; ".join(self.violations))


class UnknownReferenceError(RomaError, LookupError):
    """A node, function, tier or resource name does not resolve."""

    def __str__(self) -> str:
        # LookupError reprs its arg; keep the plain message
        return str(self.args[0]) if self.args else ""


class InfeasibleError(RomaError):
    """No placement or allocation satisfies the constraints."""


class CapacityError(RomaError, ValueError):
    """A fixed allocation exceeds a node capacity."""


class LpStructureError(RomaError, ValueError):
    """Malformed linear program (bad index, NaN, inverted bounds)."""


class DegenerateFitError(RomaError, ValueError):
    def __init__(self, message: str = "degenerate fit data"):
        super().__init__(message)


class ScenarioError(RomaError):
    """Scenario or data file could not be read or parsed."""
