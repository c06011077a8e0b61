"""Run records persisted as JSON lines.

Floats are written with Python's shortest round-trip representation, so
every value reads back bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .metrics import GateMetrics

SCHEMA_VERSION = 1


class RecordError(ValueError):
    pass


@dataclass
class RunRecord:
    config: dict
    metrics: GateMetrics | None
    applied_gate: np.ndarray | None
    seed: int | None = None
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        u = self.applied_gate
        return {
            "schema_version": self.schema_version,
            "timestamp": self.timestamp,
            "config": self.config,
            "metrics": None if self.metrics is None else self.metrics.as_dict(),
            "applied_gate": None if u is None else {
                "real": np.real(u).tolist(),
                "imag": np.imag(u).tolist(),
            },
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=True, default=_jsonable)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise RecordError(f"unsupported schema_version {d.get('schema_version')!r}")
        g = d.get("applied_gate")
        u = None if g is None else np.array(g["real"]) + 1j * np.array(g["imag"])
        m = d.get("metrics")
        return cls(
            config=d["config"],
            metrics=None if m is None else GateMetrics(**m),
            applied_gate=u,
            seed=d.get("seed"),
            wall_time_s=d.get("wall_time_s", 0.0),
            extra=d.get("extra", {}),
            timestamp=d["timestamp"],
            schema_version=d["schema_version"],
        )


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def append_record(path, record: RunRecord) -> None:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(record.to_json() + "\n")


def read_records(path) -> list[dict]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            if d.get("schema_version") != SCHEMA_VERSION:
                raise RecordError(f"{path}:{n}: unsupported schema_version {d.get('schema_version')!r}")
            out.append(d)
    return out


def format_matrix(u, decimals: int = 6) -> str:
    """Re and Im blocks, one row per line, fixed decimals."""
    u = np.asarray(u)
    w = decimals + 4

    def block(m):
        return "\n".join("  ".join(f"{v:{w}.{decimals}f}" for v in row) for row in m)

    return f"Re(U_a) =\n{block(u.real)}\nIm(U_a) =\n{block(u.imag)}"
