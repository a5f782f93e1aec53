from __future__ import annotations

import json
import time
from collections.abc import Iterator, Mapping
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

import pandas as pd

REPORT_KEYS = ("command", "inputs", "verdict", "cap", "stats", "wall_time")


@dataclass(frozen=True)
class RunReport:
    command: str
    inputs: Mapping[str, Any]
    verdict: str | None = None
    cap: int | None = None
    stats: pd.DataFrame | Mapping[str, Any] | None = None
    wall_time: float = 0.0
    extra: Mapping[str, Any] = field(default_factory=dict)  # appended after the fixed keys

    def as_dict(self) -> dict[str, Any]:
        stats = self.stats
        if isinstance(stats, pd.DataFrame):
            stats = json.loads(stats.to_json(orient="records"))
        out = {
            "command": self.command,
            "inputs": dict(self.inputs),
            "verdict": self.verdict,
            "cap": self.cap,
            "stats": stats,
            "wall_time": round(self.wall_time, 6),
        }
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, ensure_ascii=False, default=str)


@contextmanager
def stopwatch() -> Iterator[list[float]]:
    box = [0.0]
    start = time.perf_counter()
    try:
        yield box
    finally:
        box[0] = time.perf_counter() - start
