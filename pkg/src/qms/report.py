"""Run reports and their JSON/CSV encodings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any

from .errors import ValidationError
from .statevector import Distribution


@dataclass
class RunReport:
    model: str
    config: dict[str, Any]
    seed: int | None
    distribution: Distribution | None = None
    counts: dict[str, int] | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)
    wall_time_ms: float | None = None
    table: list[dict[str, float]] | None = None
    """Row data for reports that are not outcome distributions (oracle)."""

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "config": self.config,
            "distribution": dict(self.distribution) if self.distribution is not None else None,
            "counts": dict(sorted(self.counts.items())) if self.counts is not None else None,
            "diagnostics": self.diagnostics,
            "seed": self.seed,
            "wall_time_ms": self.wall_time_ms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.table is not None:
            keys = list(self.table[0]) if self.table else []
            writer.writerow(keys)
            for row in self.table:
                writer.writerow([repr(row[k]) for k in keys])
        elif self.counts is not None:
            writer.writerow(["bitstring", "count"])
            for key, c in sorted(self.counts.items()):
                writer.writerow([key, c])
        else:
            writer.writerow(["bitstring", "probability"])
            for key, p in (self.distribution or {}).items():
                writer.writerow([key, repr(p)])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


def load_report(text: str) -> dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"report is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("report must be a JSON object")
    missing = {"model", "config"} - set(data)
    if missing:
        raise ValidationError(f"report lacks keys {sorted(missing)}")
    return data
