"""Accuracy and information-transfer-rate statistics."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from importlib import resources
from typing import Optional, Sequence

from .core import Command

# the headline mean accuracy quoted for the human-subject study; the bundled
# per-direction success flags recount to 87.50 %
REPORTED_MEAN_ACCURACY = "86.25"

DIRECTION_ORDER = ("Forward", "Backward", "Left", "Right")
_FIXTURE_COLUMNS = {"F": "Forward", "B": "Backward", "L": "Left", "R": "Right"}


@dataclass(frozen=True)
class TrialRecord:
    participant: str
    session: int
    direction: str
    success: bool


def percent(rate: Fraction) -> str:
    """Format an exact rate as a percentage, 2 decimals, round half up."""
    value = Decimal(rate.numerator * 100) / Decimal(rate.denominator)
    return str(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class Stratum:
    successes: int
    attempts: int

    @property
    def rate(self) -> Fraction:
        return Fraction(self.successes, self.attempts)

    @property
    def percent(self) -> str:
        return percent(self.rate)


@dataclass(frozen=True)
class AccuracyReport:
    overall: Stratum
    per_direction: dict
    per_session: dict
    per_participant: dict

    def rows(self):
        """(stratum, key, successes, attempts, percent) rows, overall first."""
        yield ("overall", "all", self.overall.successes, self.overall.attempts, self.overall.percent)
        for name, table in (("direction", self.per_direction), ("session", self.per_session),
                            ("participant", self.per_participant)):
            for key, s in table.items():
                yield (name, str(key), s.successes, s.attempts, s.percent)

    def text(self) -> str:
        lines = [f"overall accuracy: {self.overall.percent}% "
                 f"({self.overall.successes}/{self.overall.attempts})"]
        for title, table in (("direction", self.per_direction), ("session", self.per_session),
                             ("participant", self.per_participant)):
            lines.append(f"per {title}:")
            for key, s in table.items():
                lines.append(f"  {key}: {s.percent}% ({s.successes}/{s.attempts})")
        return "\n".join(lines)


def score(decisions: Sequence, intents: Sequence, participant: str = "sim",
          session: int = 1) -> list:
    """One TrialRecord per epoch; a NoDecision is a miss."""
    if len(decisions) != len(intents):
        raise ValueError(f"{len(decisions)} decisions vs {len(intents)} intents")
    records = []
    for d, intent in zip(decisions, intents):
        intent = Command(intent)
        command = d.command if hasattr(d, "command") else Command(d)
        records.append(TrialRecord(participant, session, intent.value, command == intent))
    return records


def _key(value):
    return (0, int(value)) if str(value).isdigit() else (1, str(value))


def aggregate(records: Sequence[TrialRecord]) -> AccuracyReport:
    if not records:
        raise ValueError("no records to aggregate")
    counts = {k: defaultdict(lambda: [0, 0]) for k in ("direction", "session", "participant")}
    hits = 0
    for r in records:
        hits += r.success
        for name, key in (("direction", r.direction), ("session", r.session),
                          ("participant", r.participant)):
            c = counts[name][key]
            c[0] += r.success
            c[1] += 1

    def table(name, order=None):
        keys = counts[name].keys()
        if order:
            keys = [k for k in order if k in counts[name]] + sorted(set(keys) - set(order))
        else:
            keys = sorted(keys, key=_key)
        return {k: Stratum(*counts[name][k]) for k in keys}

    return AccuracyReport(
        Stratum(hits, len(records)),
        table("direction", DIRECTION_ORDER),
        table("session"),
        table("participant"),
    )


def load_table2() -> list:
    """Per-direction success flags of the 12-participant, 5-session study."""
    text = resources.files("hybridbci").joinpath("data/table2.csv").read_text(encoding="utf-8")
    records = []
    for row in csv.DictReader(text.splitlines()):
        for col, direction in _FIXTURE_COLUMNS.items():
            records.append(TrialRecord(row["participant"], int(row["session"]), direction,
                                       row[col] == "1"))
    return records


def table2_reported_accuracy() -> dict:
    """The per-trial A(%) column as printed, keyed by (participant, session)."""
    text = resources.files("hybridbci").joinpath("data/table2.csv").read_text(encoding="utf-8")
    return {(r["participant"], int(r["session"])): int(r["A_percent"])
            for r in csv.DictReader(text.splitlines())}


def itr_bits_per_selection(p: float, n: int) -> float:
    """Wolpaw bits per selection for accuracy ``p`` over ``n`` targets."""
    if n < 2:
        raise ValueError("need at least 2 targets")
    if not 0 <= p <= 1:
        raise ValueError("accuracy must lie in [0, 1]")
    bits = math.log2(n)
    if p > 0:
        bits += p * math.log2(p)
    if p < 1:
        bits += (1 - p) * math.log2((1 - p) / (n - 1))
    return bits


def itr_bpm(p: float, n: int, selection_time: float) -> float:
    if selection_time <= 0:
        raise ValueError("selection time must be positive")
    return itr_bits_per_selection(p, n) * 60.0 / selection_time


def selection_time_for(bpm: float, p: float, n: int) -> Optional[float]:
    """Selection time (s) that yields ``bpm`` at accuracy ``p``."""
    bits = itr_bits_per_selection(p, n)
    return None if bpm <= 0 else bits * 60.0 / bpm
