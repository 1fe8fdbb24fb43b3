"""Scripted oracle for external facts: defaults, insured events, deliveries, rates."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable


@dataclass
class Oracle:
    """Answers keyed by ``(kind, subject, day)``.

    Event kinds are booleans dated on the day they become known.  Rates are
    stored as exact fractions.
    """

    answers: dict[tuple[str, str, int], object] = field(default_factory=dict)

    def set(self, kind: str, subject: str, day: int, value) -> None:
        if isinstance(value, str):
            value = Fraction(value)
        self.answers[(kind, subject, day)] = value

    def query(self, kind: str, subject: str, day: int):
        return self.answers.get((kind, subject, day))

    def event_by(self, kind: str, subject: str, day: int) -> bool | None:
        """Has the event happened on or before ``day``?

        None when nothing about ``(kind, subject)`` is known up to ``day``;
        an explicit False entry means "attested not to have happened".
        """
        seen = None
        for (k, s, d), value in self.answers.items():
            if k != kind or s != subject or d > day:
                continue
            if value is True:
                return True
            seen = False
        return seen

    def rate(self, subject: str, day: int) -> Fraction | None:
        value = self.query("rate", subject, day)
        return None if value is None else Fraction(value)

    @classmethod
    def from_json(cls, entries: Iterable[dict]) -> "Oracle":
        oracle = cls()
        for e in entries:
            oracle.set(e["kind"], e["subject"], e["day"], e["value"])
        return oracle

    def to_json(self) -> list[dict]:
        out = []
        for (kind, subject, day), value in sorted(self.answers.items(), key=lambda kv: repr(kv[0])):
            if isinstance(value, Fraction):
                value = str(value)
            out.append({"kind": kind, "subject": subject, "day": day, "value": value})
        return out
