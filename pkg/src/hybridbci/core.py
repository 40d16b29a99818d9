"""Shared domain types for the hybrid SSVEP + P300 pipeline.

Everything here is an immutable value. Timestamps are integer microseconds
since stream start; channel values are microvolts in the fixed order
``CHANNELS``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

CHANNELS = ("Fz", "Cz", "Pz", "PO7", "PO8", "Oz")
N_CHANNELS = len(CHANNELS)
MARKER_CODES = ("o", "p", "q", "r")

# passband of the SSVEP bandpass; configured frequencies must sit inside it
PASSBAND = (6.5, 30.0)


class Command(str, enum.Enum):
    FORWARD = "Forward"
    RIGHT = "Right"
    BACKWARD = "Backward"
    LEFT = "Left"
    NO_DECISION = "NoDecision"

    def __str__(self) -> str:
        return self.value


DIRECTIONS = (Command.FORWARD, Command.RIGHT, Command.BACKWARD, Command.LEFT)


class StreamError(ValueError):
    """Raised when a sample or marker stream violates its ordering contract."""


class ConfigError(ValueError):
    """Raised for an invalid StimulusConfig; ``errors`` lists every violation."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ProtocolError(ValueError):
    """Raised when marker or decision inputs break the stimulation protocol."""


@dataclass(frozen=True)
class SampleFrame:
    timestamp: int
    channels: tuple

    def __post_init__(self):
        if len(self.channels) != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} channel values, got {len(self.channels)}")
        if not all(math.isfinite(v) for v in self.channels):
            raise ValueError("channel values must be finite")


@dataclass(frozen=True)
class MarkerEvent:
    code: str
    timestamp: int

    def __post_init__(self):
        if self.code not in MARKER_CODES:
            raise ValueError(f"unknown marker code {self.code!r}")


@dataclass(frozen=True)
class LedEntry:
    led_id: int
    frequency: float
    marker: str
    command: Command


@dataclass(frozen=True)
class StimulusConfig:
    """LED table plus the timing parameters shared by simulator and decoder.

    ``epoch_offset_ms`` is where stimulation epoch 0 starts on the recording
    clock. Epoch ``k`` spans ``[offset + k*epoch, offset + (k+1)*epoch)``.
    """

    entries: tuple = (
        LedEntry(0, 7.0, "o", Command.FORWARD),
        LedEntry(1, 8.0, "p", Command.RIGHT),
        LedEntry(2, 9.0, "q", Command.BACKWARD),
        LedEntry(3, 10.0, "r", Command.LEFT),
    )
    sample_rate: float = 250.0
    p300_epoch_ms: float = 2000.0
    p300_window_ms: tuple = (290.0, 500.0)
    epoch_offset_ms: float = 1000.0
    flash_duration_ms: float = 100.0

    @property
    def frequencies(self):
        return tuple(e.frequency for e in self.entries)

    def by_frequency(self, frequency: float) -> LedEntry:
        for e in self.entries:
            if e.frequency == frequency:
                return e
        raise KeyError(frequency)

    def by_marker(self, code: str) -> LedEntry:
        for e in self.entries:
            if e.marker == code:
                return e
        raise KeyError(code)

    def by_led(self, led_id: int) -> LedEntry:
        for e in self.entries:
            if e.led_id == led_id:
                return e
        raise KeyError(led_id)

    @property
    def sample_period_us(self) -> int:
        return int(round(1e6 / self.sample_rate))

    @property
    def epoch_us(self) -> int:
        return int(round(self.p300_epoch_ms * 1000))

    @property
    def epoch_offset_us(self) -> int:
        return int(round(self.epoch_offset_ms * 1000))


DEFAULT_CONFIG = StimulusConfig()


def validate_config(config: StimulusConfig) -> list:
    """Return every violated StimulusConfig invariant; an empty list means ok."""
    errors = []
    freqs = [e.frequency for e in config.entries]
    markers = [e.marker for e in config.entries]
    commands = [e.command for e in config.entries]
    leds = [e.led_id for e in config.entries]

    if len(config.entries) != 4:
        errors.append(f"expected 4 LED entries, got {len(config.entries)}")
    for f in sorted({f for f in freqs if freqs.count(f) > 1}):
        errors.append(f"duplicate frequency {f:g} Hz")
    for m in sorted({m for m in markers if markers.count(m) > 1}):
        errors.append(f"duplicate marker {m!r}")
    for c in sorted({c.value for c in commands if commands.count(c) > 1}):
        errors.append(f"duplicate command {c}")
    for i in sorted({i for i in leds if leds.count(i) > 1}):
        errors.append(f"duplicate led id {i}")
    for e in config.entries:
        if not PASSBAND[0] <= e.frequency <= PASSBAND[1]:
            errors.append(
                f"frequency {e.frequency:g} Hz outside passband [{PASSBAND[0]:g}, {PASSBAND[1]:g}] Hz"
            )
        if e.marker not in MARKER_CODES:
            errors.append(f"unknown marker code {e.marker!r}")
        if e.command not in DIRECTIONS:
            errors.append(f"invalid command {e.command}")
        if not 0 <= e.led_id <= 3:
            errors.append(f"led id {e.led_id} outside 0-3")
    if config.sample_rate <= 0:
        errors.append("sample rate must be positive")
    start, end = config.p300_window_ms
    if not 0 <= start < end:
        errors.append(f"invalid P300 window ({start:g}, {end:g}) ms")
    if config.p300_epoch_ms < end:
        errors.append(
            f"epoch length {config.p300_epoch_ms:g} ms < window end {end:g} ms"
        )
    if config.epoch_offset_ms < 0:
        errors.append("epoch offset must be non-negative")
    return errors


def check_config(config: StimulusConfig) -> StimulusConfig:
    errors = validate_config(config)
    if errors:
        raise ConfigError(errors)
    return config


@dataclass(frozen=True)
class Recording:
    """A block of SampleFrames stored column-wise.

    ``timestamps`` is int64 microseconds, ``data`` is ``(n, 6)`` float64.
    """

    timestamps: np.ndarray
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != N_CHANNELS:
            raise ValueError(f"data must have shape (n, {N_CHANNELS})")
        if ts.shape != (data.shape[0],):
            raise ValueError("timestamps and data length differ")
        check_monotonic(ts)
        if not np.all(np.isfinite(data)):
            raise ValueError("channel values must be finite")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "data", data)

    def __len__(self):
        return len(self.timestamps)

    def channel(self, name: str) -> np.ndarray:
        return self.data[:, CHANNELS.index(name)]

    def frames(self):
        for t, row in zip(self.timestamps, self.data):
            yield SampleFrame(int(t), tuple(float(v) for v in row))

    @classmethod
    def from_frames(cls, frames: Sequence[SampleFrame]) -> "Recording":
        ts = np.array([f.timestamp for f in frames], dtype=np.int64)
        data = np.array([f.channels for f in frames], dtype=np.float64).reshape(-1, N_CHANNELS)
        return cls(ts, data)


def check_monotonic(timestamps, previous: Optional[int] = None, strict: bool = True):
    """Reject out-of-order timestamps; streams are never reordered."""
    ts = np.asarray(timestamps, dtype=np.int64)
    if ts.size == 0:
        return
    d = np.diff(ts)
    bad = np.flatnonzero(d <= 0) if strict else np.flatnonzero(d < 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise StreamError(f"timestamp {int(ts[i])} at index {i} is not increasing")
    if previous is not None and (ts[0] <= previous if strict else ts[0] < previous):
        raise StreamError(f"timestamp {int(ts[0])} does not follow {previous}")


def check_markers(markers: Sequence[MarkerEvent]):
    check_monotonic([m.timestamp for m in markers], strict=False)


@dataclass(frozen=True)
class Decision:
    """Fused output for one stimulation epoch.

    With ``gated`` (the normal mode) ``command`` is a direction exactly when
    ``agreement`` holds. Ungated decisions come from the diagnostic
    SSVEP-only mode and keep ``agreement`` as an observation only.
    """

    ssvep_winner: Optional[float]
    p300_winner: Optional[str]
    agreement: bool
    command: Command
    decided_at: int = 0
    epoch_index: int = 0
    gated: bool = True
    reason: str = ""
