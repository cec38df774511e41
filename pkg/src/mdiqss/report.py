"""Line-oriented result records.

Every record is one JSON object on one line with a ``kind`` field first.
Field order is fixed, so equal records serialize to equal bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .protocol import SessionConfig, Transcript


@dataclass(frozen=True)
class RunReport:
    config: dict[str, Any]
    verdict: str
    check_error_rate: float
    checked_rounds: int
    analyzer_success_fraction: float
    usable_round_count: int
    message_bit_error_rate: float | None
    integrity_ok: bool | None
    wall_time: float | None = None

    def __post_init__(self) -> None:
        for name in ("check_error_rate", "analyzer_success_fraction", "message_bit_error_rate"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a fraction, got {v}")

    @classmethod
    def from_transcript(cls, t: Transcript, wall_time: float | None = None) -> "RunReport":
        return cls(
            config=t.config.to_dict(),
            verdict=t.verdict.value,
            check_error_rate=t.check_error_rate,
            checked_rounds=t.check.checked,
            analyzer_success_fraction=t.analyzer_success_fraction,
            usable_round_count=len(t.usable_positions),
            message_bit_error_rate=t.message_bit_error_rate,
            integrity_ok=t.integrity_ok,
            wall_time=wall_time,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "run",
            "config": self.config,
            "verdict": self.verdict,
            "check_error_rate": self.check_error_rate,
            "checked_rounds": self.checked_rounds,
            "analyzer_success_fraction": self.analyzer_success_fraction,
            "usable_round_count": self.usable_round_count,
            "message_bit_error_rate": self.message_bit_error_rate,
            "integrity_ok": self.integrity_ok,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RunReport":
        if d.get("kind") != "run":
            raise ValueError(f"not a run record: kind={d.get('kind')!r}")
        SessionConfig.from_dict(d["config"])
        return cls(
            config=dict(d["config"]),
            verdict=d["verdict"],
            check_error_rate=d["check_error_rate"],
            checked_rounds=d["checked_rounds"],
            analyzer_success_fraction=d["analyzer_success_fraction"],
            usable_round_count=d["usable_round_count"],
            message_bit_error_rate=d["message_bit_error_rate"],
            integrity_ok=d["integrity_ok"],
            wall_time=d["wall_time"],
        )


def dumps_record(record: Mapping[str, Any]) -> str:
    if "kind" not in record:
        raise ValueError("records need a 'kind' field")
    return json.dumps(record, separators=(",", ":"), allow_nan=False)


def loads_record(line: str) -> dict[str, Any]:
    obj = json.loads(line)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("a record line must be a JSON object with a 'kind' field")
    return obj


def _flatten(prefix: str, value: Any, out: dict[str, Any]) -> None:
    if isinstance(value, Mapping):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    else:
        out[prefix] = value


def to_csv(records: Iterable[Mapping[str, Any]]) -> str:
    """Flatten nested records (``config.noise.depolarizing_p`` style) into CSV."""
    rows = []
    for rec in records:
        flat: dict[str, Any] = {}
        _flatten("", rec, flat)
        rows.append(flat)
    columns: list[str] = []
    for row in rows:
        for k in row:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: "" if row.get(k) is None else row.get(k) for k in columns})
    return buf.getvalue()
