"""Small pass/fail report type shared by the verification operations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one verification check.

    ``witness`` is a module-specific structure locating the first failure
    (a set pair, a point index, a triple, ...); ``None`` when the check passed.
    """

    name: str
    passed: bool
    witness: Any = None
    detail: str = ""
    checked: int = 0
    extras: dict = field(default_factory=dict)

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"[{status}] {self.name} ({self.checked} checks)"
        if self.detail:
            line += f": {self.detail}"
        return line
