"""Plain-text file formats: recordings, markers, intents, decision logs, config.

Every reader validates as it goes and raises :class:`DataError` carrying the
1-based line number of the first bad row.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import (
    CHANNELS,
    Command,
    ConfigError,
    Decision,
    LedEntry,
    MarkerEvent,
    Recording,
    StimulusConfig,
    validate_config,
)

RECORDING_HEADER = ("t_us",) + CHANNELS
MARKER_HEADER = ("t_us", "code")
INTENT_HEADER = ("epoch_idx", "attended_led", "command")
DECISION_HEADER = ("epoch_idx", "ssvep_winner_hz", "p300_winner", "agreement", "command", "reason")


class DataError(ValueError):
    def __init__(self, message, line: Optional[int] = None, path=None):
        self.line = line
        self.path = path
        where = f"{path}:{line}: " if line is not None else ""
        super().__init__(where + message)


def _fmt(v: float) -> str:
    return format(float(v), ".10g")


def _check_header(row, expected, path, required=None):
    required = expected if required is None else required
    if row is None or tuple(c.strip() for c in row[: len(required)]) != tuple(required):
        raise DataError(f"expected header {','.join(expected)}", 1, path)


# -- recordings ---------------------------------------------------------------

def write_recording(path, recording: Recording):
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(",".join(RECORDING_HEADER) + "\n")
        for t, row in zip(recording.timestamps, recording.data):
            f.write(str(int(t)) + "," + ",".join(_fmt(v) for v in row) + "\n")


def iter_recording(path, chunk_size: int = 250) -> Iterator[Recording]:
    """Stream a recording CSV as :class:`Recording` blocks of ``chunk_size`` rows."""
    last = None
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        _check_header(next(reader, None), RECORDING_HEADER, path)
        ts, rows = [], []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RECORDING_HEADER):
                raise DataError(f"expected {len(RECORDING_HEADER)} fields, got {len(row)}", line, path)
            try:
                t = int(row[0])
                vals = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataError(str(exc), line, path) from None
            if not all(np.isfinite(vals)):
                raise DataError("non-finite channel value", line, path)
            if last is not None and t <= last:
                raise DataError(f"timestamp {t} is not increasing", line, path)
            last = t
            ts.append(t)
            rows.append(vals)
            if len(ts) == chunk_size:
                yield Recording(np.array(ts), np.array(rows))
                ts, rows = [], []
        if ts:
            yield Recording(np.array(ts), np.array(rows))


def read_recording(path) -> Recording:
    blocks = list(iter_recording(path, chunk_size=10_000))
    if not blocks:
        return Recording(np.zeros(0, dtype=np.int64), np.zeros((0, len(CHANNELS))))
    return Recording(
        np.concatenate([b.timestamps for b in blocks]),
        np.concatenate([b.data for b in blocks]),
    )


# -- markers ------------------------------------------------------------------

def write_markers(path, markers: Sequence[MarkerEvent]):
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(",".join(MARKER_HEADER) + "\n")
        for m in markers:
            f.write(f"{m.timestamp},{m.code}\n")


def iter_markers(path) -> Iterator[MarkerEvent]:
    last = None
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        _check_header(next(reader, None), MARKER_HEADER, path)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"expected 2 fields, got {len(row)}", line, path)
            try:
                m = MarkerEvent(row[1].strip(), int(row[0]))
            except ValueError as exc:
                raise DataError(str(exc), line, path) from None
            if last is not None and m.timestamp < last:
                raise DataError(f"marker timestamp {m.timestamp} goes backwards", line, path)
            last = m.timestamp
            yield m


def read_markers(path) -> list:
    return list(iter_markers(path))


# -- intents ------------------------------------------------------------------

def write_intents(path, attended: Sequence[int], config: StimulusConfig):
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(",".join(INTENT_HEADER) + "\n")
        for k, led in enumerate(attended):
            f.write(f"{k},{led},{config.by_led(led).command.value}\n")


def read_intents(path) -> list:
    """Intended command per epoch, ordered by epoch index."""
    out = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        _check_header(next(reader, None), INTENT_HEADER, path)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[int(row[0])] = Command(row[2].strip())
            except (ValueError, IndexError) as exc:
                raise DataError(str(exc), line, path) from None
    if sorted(out) != list(range(len(out))):
        raise DataError("epoch indices are not contiguous from 0", None, path)
    return [out[k] for k in range(len(out))]


# -- decision log -------------------------------------------------------------

def decision_row(d: Decision) -> str:
    win = "" if d.ssvep_winner is None else format(d.ssvep_winner, "g")
    p3 = d.p300_winner or ""
    reason = d.reason.replace(",", ";").replace("\n", " ")
    return f"{d.epoch_index},{win},{p3},{int(d.agreement)},{d.command.value},{reason}\n"


def write_decisions(path, decisions: Sequence[Decision]):
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(",".join(DECISION_HEADER) + "\n")
        for d in decisions:
            f.write(decision_row(d))


def read_decisions(path) -> list:
    """Read a decision log; the trailing ``reason`` column is optional."""
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        _check_header(next(reader, None), DECISION_HEADER, path, required=DECISION_HEADER[:5])
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                win = float(row[1]) if row[1] else None
                out.append(Decision(
                    win, row[2] or None, row[3].strip() in ("1", "true", "True"),
                    Command(row[4].strip()), 0, int(row[0]), True,
                    row[5] if len(row) > 5 else "",
                ))
            except (ValueError, IndexError) as exc:
                raise DataError(str(exc), line, path) from None
    return out


# -- config -------------------------------------------------------------------

def format_config(config: StimulusConfig) -> str:
    lines = [f"sample_rate = {config.sample_rate:g}"]
    for e in config.entries:
        lines.append(f"led{e.led_id} = {e.frequency:g}, {e.marker}, {e.command.value}")
    lines += [
        f"p300_epoch_ms = {config.p300_epoch_ms:g}",
        f"p300_window_ms = {config.p300_window_ms[0]:g}, {config.p300_window_ms[1]:g}",
        f"epoch_offset_ms = {config.epoch_offset_ms:g}",
        f"flash_duration_ms = {config.flash_duration_ms:g}",
    ]
    return "\n".join(lines) + "\n"


def write_config(path, config: StimulusConfig):
    Path(path).write_text(format_config(config), encoding="utf-8")


def parse_config(text: str) -> StimulusConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys that are absent keep their defaults. Raises :class:`ConfigError`
    listing every problem found.
    """
    default = StimulusConfig()
    values, entries, errors = {}, [], []
    scalar = {"sample_rate", "p300_epoch_ms", "epoch_offset_ms", "flash_duration_ms"}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {n}: expected key = value")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key.startswith("led") and key[3:].isdigit():
                freq, marker, command = (s.strip() for s in val.split(","))
                entries.append(LedEntry(int(key[3:]), float(freq), marker, Command(command)))
            elif key in scalar:
                values[key] = float(val)
            elif key == "p300_window_ms":
                lo, hi = (float(s) for s in val.split(","))
                values[key] = (lo, hi)
            else:
                errors.append(f"line {n}: unknown key {key!r}")
        except ValueError as exc:
            errors.append(f"line {n}: {exc}")
    if errors:
        raise ConfigError(errors)
    if entries:
        values["entries"] = tuple(sorted(entries, key=lambda e: e.led_id))
    config = StimulusConfig(**{**default.__dict__, **values})
    problems = validate_config(config)
    if problems:
        raise ConfigError(problems)
    return config


def read_config(path) -> StimulusConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))

