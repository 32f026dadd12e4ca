"""Check records and suite reports with deterministic serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .measure_space import RScalar

PASS, FAIL, INFO = "pass", "fail", "info"


def _clean(x):
    if isinstance(x, RScalar):
        return [_clean(v) for v in x.values]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


@dataclass
class CheckRecord:
    """One verified statement.

    ``residual`` holds one value per atom (``None`` when the check is not
    residual-based); ``slope`` holds per-atom refinement slopes where a
    convergence rate is part of the claim.
    """

    name: str
    anchor: str
    status: str
    residual: Any = None
    tol: float | None = None
    metric: str = "relative"
    slope: Any = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def worst(self) -> float | None:
        if self.residual is None:
            return None
        vals = self.residual.values if isinstance(self.residual, RScalar) else np.asarray(self.residual)
        return float(np.max(vals)) if len(vals) else None

    def to_dict(self) -> dict:
        return _clean(
            {
                "name": self.name,
                "anchor": self.anchor,
                "status": self.status,
                "metric": self.metric,
                "tol": self.tol,
                "residual": self.residual,
                "slope": self.slope,
                "details": self.details,
            }
        )


def status_of(ok: bool) -> str:
    return PASS if ok else FAIL


@dataclass
class SuiteReport:
    label: str
    atoms: tuple = ()
    records: list = field(default_factory=list)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    def extend(self, other: "SuiteReport") -> "SuiteReport":
        self.records.extend(other.records)
        if not self.atoms:
            self.atoms = other.atoms
        return self

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list:
        return [r for r in self.records if not r.passed]

    def get(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def find(self, prefix: str) -> list:
        return [r for r in self.records if r.name.startswith(prefix)]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "atoms": list(self.atoms),
            "passed": self.passed,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, no wall-clock fields."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False)

    def to_text(self) -> str:
        rows = [("status", "check", "worst", "tol", "anchor")]
        for r in self.records:
            w = r.worst()
            rows.append(
                (
                    r.status.upper(),
                    r.name,
                    "-" if w is None else f"{w:.3e}",
                    "-" if r.tol is None else f"{r.tol:.1e}",
                    r.anchor,
                )
            )
        widths = [max(len(row[i]) for row in rows) for i in range(4)]
        lines = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row[:4])) + "  " + row[4]
            for row in rows
        ]
        n_fail = len(self.failures())
        lines.append(f"-- {self.label}: {len(self.records)} checks, {n_fail} failed")
        return "\n".join(lines)


def convergence_csv(levels: Sequence[int], residuals: np.ndarray, atoms: Sequence[str], slopes) -> str:
    """Rows ``level, panels, residual per atom`` followed by a ``slope`` row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "panels", *atoms])
    for i, (n, row) in enumerate(zip(levels, residuals)):
        w.writerow([i, n, *(repr(float(v)) for v in row)])
    w.writerow(["slope", "", *("" if s is None else repr(float(s)) for s in slopes)])
    return buf.getvalue()
