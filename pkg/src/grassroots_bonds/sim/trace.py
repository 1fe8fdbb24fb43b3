"""Trace records, JSONL serialisation and golden-trace diffing."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

FIELDS = ("seq", "day_of_actor", "actor", "action", "params", "result", "world_hash")


@dataclass(frozen=True)
class TraceRecord:
    seq: int
    day_of_actor: int | None
    actor: str
    action: str
    params: dict
    result: dict
    world_hash: str

    def to_json(self) -> dict:
        return {f: getattr(self, f) for f in FIELDS}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict) -> "TraceRecord":
        missing = [f for f in FIELDS if f not in obj]
        if missing:
            raise ValueError(f"trace record missing fields {missing}")
        return cls(**{f: obj[f] for f in FIELDS})


def write_jsonl(records: Iterable[TraceRecord], fh: IO[str]) -> None:
    for rec in records:
        fh.write(rec.dumps())
        fh.write("\n")


def read_jsonl(fh: IO[str]) -> Iterator[TraceRecord]:
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            yield TraceRecord.from_json(json.loads(line))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None


@dataclass(frozen=True)
class TraceDiff:
    seq: int
    field: str
    expected: object
    actual: object

    def __str__(self) -> str:
        return f"seq {self.seq} {self.field}: expected {self.expected!r}, got {self.actual!r}"


def diff_traces(expected: list[TraceRecord], actual: list[TraceRecord], limit: int | None = None) -> list[TraceDiff]:
    """Field-level differences, in record order; length mismatch reported last."""
    out = []
    for e, a in zip(expected, actual):
        for f in FIELDS:
            ev, av = getattr(e, f), getattr(a, f)
            if ev != av:
                out.append(TraceDiff(e.seq, f, ev, av))
                if limit is not None and len(out) >= limit:
                    return out
    if len(expected) != len(actual):
        n = min(len(expected), len(actual))
        out.append(TraceDiff(n, "length", len(expected), len(actual)))
    return out
