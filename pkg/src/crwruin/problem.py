from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationError


@dataclass(frozen=True)
class Barriers:
    """Upper barrier ``A`` and lower barrier magnitude ``B`` (the walk stops at A or -B)."""

    A: int
    B: int

    def __post_init__(self):
        for name in ("A", "B"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ValidationError(f"barrier {name} must be a positive integer", field=name)


def as_barriers(b) -> Barriers:
    if isinstance(b, Barriers):
        return b
    A, B = b
    return Barriers(A, B)


@dataclass(frozen=True)
class RuinSolution:
    alpha: float
    beta: float
    expected_tau: Optional[float] = None
    method: str = ""
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "expected_tau": self.expected_tau,
            "method": self.method,
            "diagnostics": dict(self.diagnostics),
        }
