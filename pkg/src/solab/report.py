"""Plain-text certification reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def fmt(value) -> str:
    """Deterministic text for report values (17 significant digits for floats)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value + 0.0, ".17g")  # + 0.0 turns -0.0 into 0.0
    if value is None:
        return "none"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(fmt(v) for v in value) + "]"
    try:
        return format(float(value), ".17g")
    except (TypeError, ValueError):
        return str(value)


@dataclass
class CertificationReport:
    """Outcome of one numerical identity or bound check.

    Attributes
    ----------
    identity : str
        Short name of the checked statement.
    max_discrepancy : float
        Largest observed deviation (or the reported bound itself).
    tolerance : float
        Threshold the discrepancy was compared against.
    verdict : bool
        True for PASS.
    samples_used : int
    details : dict
        Extra key/value pairs written after the required keys.
    """

    identity: str
    max_discrepancy: float
    tolerance: float
    verdict: bool
    samples_used: int
    details: dict = field(default_factory=dict)

    @property
    def verdict_text(self) -> str:
        return "PASS" if self.verdict else "FAIL"

    def to_text(self) -> str:
        lines = [
            f"identity = {self.identity}",
            f"max_discrepancy = {fmt(self.max_discrepancy)}",
            f"tolerance = {fmt(self.tolerance)}",
            f"verdict = {self.verdict_text}",
            f"samples_used = {self.samples_used}",
        ]
        lines += [f"{k} = {fmt(v)}" for k, v in self.details.items()]
        return "\n".join(lines) + "\n"
