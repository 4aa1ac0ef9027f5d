"""Exception hierarchy shared by every solab module."""

from __future__ import annotations


class SolabError(Exception):
    """Base class for all library errors."""


class DomainError(SolabError, ValueError):
    """A radius or time lies outside the domain of a field or map."""


class ParamError(SolabError, ValueError):
    """A construction parameter is out of range."""


class UnknownName(SolabError, KeyError):
    """A named builtin (soliton, preset, check) does not exist."""

    def __str__(self) -> str:  # KeyError quotes its argument; keep it plain
        return str(self.args[0]) if self.args else ""


class SingularCoefficient(SolabError, ArithmeticError):
    """The coefficient ``1/r - F'/F`` vanishes inside the requested domain.

    Attributes
    ----------
    radius : float
        Location of the sign change, refined by Brent's method.
    """

    def __init__(self, radius: float):
        super().__init__(f"1/r - F'/F vanishes at r* = {radius!r}; choose one side")
        self.radius = float(radius)


class QuadratureFailure(SolabError, ArithmeticError):
    """Richardson doubling did not reach the requested tolerance."""


class Extinction(SolabError):
    """A sphere shrank below the extinction floor."""


class StepFloor(SolabError):
    """Adaptive step control collapsed."""


class BlowUp(SolabError):
    """A flow line left the domain before the requested time."""


class InverseFlowFailure(SolabError):
    """Inverting the soliton diffeomorphism failed."""


class InsufficientSamples(SolabError, ValueError):
    """A trajectory is too short (or non-uniform) for a finite-difference check."""


class NoRoot(SolabError, ValueError):
    """No sign change of the soliton defect on the bracket."""


class OptimizerStall(SolabError):
    """Path optimization stopped before meeting the gradient tolerance."""


class ParseError(SolabError, ValueError):
    """A scenario config could not be parsed.

    Attributes
    ----------
    line : int or None
        One-based line number of the offending line.
    """

    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class ValidationError(SolabError, ValueError):
    """A scenario config names an unknown key or carries a bad value.

    Attributes
    ----------
    key : str
        The offending key.
    """

    def __init__(self, key: str, message: str = ""):
        super().__init__(f"{key}: {message}" if message else key)
        self.key = key
