"""Check reports: the uniform result record produced by every inequality suite."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence


@dataclass
class CheckReport:
    """Outcome of one named inequality check.

    Margins are signed so that pass means every margin >= -tolerance.
    ``vacuous`` marks suites whose preconditions were unmet (their
    conclusion was never asserted).
    """

    name: str
    margins: list[float]
    tolerance: float
    vacuous: bool = False
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def samples(self) -> int:
        return len(self.margins)

    @property
    def min_margin(self) -> float:
        finite = [m for m in self.margins if not math.isnan(m)]
        return min(finite) if finite else math.nan

    @property
    def verdict(self) -> str:
        if self.vacuous:
            return "vacuous"
        if self.margins and self.min_margin >= -self.tolerance:
            return "pass"
        return "fail"

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "vacuous")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "samples": self.samples,
            "margins": list(self.margins),
            "min_margin": self.min_margin,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "provenance": self.provenance,
        }

    def summary(self) -> str:
        return (
            f"{self.name}: {self.verdict} "
            f"(samples={self.samples}, min_margin={self.min_margin:.3e}, tol={self.tolerance:g})"
        )


def canonical_json(obj: Any) -> str:
    """Deterministic JSON serialization (sorted keys, fixed separators)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def report_hash(payload: dict[str, Any], exclude: Sequence[str] = ("timestamp",)) -> str:
    """SHA-256 of the canonical JSON with volatile fields removed."""
    trimmed = {k: v for k, v in payload.items() if k not in exclude}
    return hashlib.sha256(canonical_json(trimmed).encode()).hexdigest()
