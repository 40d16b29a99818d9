"""Software stand-in for the LED controller and the subject.

* SSVEP flicker edges quantised to the 72 MHz controller tick (125/9 ns).
* P300 flash scheduling: one flash per LED per 2 s epoch, LED order shuffled
  over four 500 ms slots, one marker per flash.
* A synthetic 6-channel EEG generator driven by those schedules.

Randomness comes from numpy's PCG64 with per-epoch substreams seeded by
``(seed, stream, epoch)``, so output does not depend on generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import (
    CHANNELS,
    MarkerEvent,
    Recording,
    StimulusConfig,
    check_config,
)

TICK_NS = Fraction(125, 9)  # one cycle of the 72 MHz clock
RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence([seed, stream, epoch])"

MIN_ONSET_GAP_MS = 400.0
SERIAL_BAUD = 9600
SERIAL_FRAME_BITS = 10  # 8N1: start + 8 data + stop

# substream ids for SeedSequence
_FLASH, _NOISE, _EDGE, _INTENT = 0, 1, 2, 3


def _rng(seed: int, stream: int, epoch: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream, epoch])))


@dataclass(frozen=True)
class ToggleStream:
    """LED edges as integer tick counts; even indices are "on" edges."""

    led_id: int
    edges: np.ndarray
    target_frequency: float
    tick_ns: Fraction = TICK_NS

    @property
    def timestamps_ns(self) -> np.ndarray:
        return self.edges * float(self.tick_ns)

    @property
    def half_period_ticks(self) -> int:
        return int(self.edges[1] - self.edges[0])

    @property
    def achieved_frequency(self) -> float:
        return float(1 / (2 * self.half_period_ticks * self.tick_ns * Fraction(1, 10**9)))


def half_period_ticks(frequency: float, tick_ns: Fraction = TICK_NS) -> int:
    exact = Fraction(10**9) / (2 * Fraction(frequency)) / tick_ns
    return int(round(exact))


def schedule_ssvep(frequency: float, duration: float, tick_ns: Fraction = TICK_NS,
                   led_id: int = 0) -> ToggleStream:
    """Square-wave edges for ``duration`` seconds, starting with an "on" edge at 0."""
    if frequency <= 0 or duration <= 0:
        raise ValueError("frequency and duration must be positive")
    hp = half_period_ticks(frequency, tick_ns)
    end = Fraction(duration) * 10**9 / tick_ns
    n = math.ceil(end / hp)  # edges strictly before the end
    return ToggleStream(led_id, np.arange(n, dtype=np.int64) * hp, float(frequency), tick_ns)


def verify_frequency(stream: ToggleStream) -> tuple:
    """Measured frequency from the mean edge interval, and % deviation from target."""
    if len(stream.edges) < 4:
        raise ValueError("need at least 4 edges to measure a frequency")
    mean_ticks = Fraction(int(stream.edges[-1] - stream.edges[0]), len(stream.edges) - 1)
    measured = 1 / (2 * mean_ticks * stream.tick_ns / 10**9)
    target = Fraction(stream.target_frequency)
    deviation = abs(measured - target) / target * 100
    return float(measured), float(deviation)


@dataclass(frozen=True)
class FlashSchedule:
    epoch_index: int
    onsets_us: tuple  # per LED id, relative to epoch start
    flash_duration_ms: float = 100.0

    def order(self):
        """LED ids in presentation order."""
        return tuple(int(i) for i in np.argsort(self.onsets_us, kind="stable"))


def schedule_flashes(
    epoch_count: int,
    seed: int = 0,
    config: Optional[StimulusConfig] = None,
    epoch_length_ms: Optional[float] = None,
) -> tuple:
    """Pseudorandom flash schedule and the matching marker stream.

    LEDs are permuted over four equal slots; each onset is jittered uniformly
    (integer microseconds) over the first ``slot - 400 ms`` of its slot so
    that consecutive onsets stay at least 400 ms apart.
    """
    config = config or StimulusConfig()
    if epoch_count < 1:
        raise ValueError("epoch_count must be >= 1")
    length_ms = config.p300_epoch_ms if epoch_length_ms is None else epoch_length_ms
    n_led = len(config.entries)
    slot_us = int(round(length_ms * 1000 / n_led))
    jitter_us = slot_us - int(round(MIN_ONSET_GAP_MS * 1000))
    if jitter_us < 0 or config.flash_duration_ms * 1000 > slot_us:
        raise ValueError(f"epoch of {length_ms} ms is too short for {n_led} flashes")
    origin = config.epoch_offset_us
    epoch_us = int(round(length_ms * 1000))
    schedules, markers = [], []
    for k in range(epoch_count):
        rng = _rng(seed, _FLASH, k)
        perm = rng.permutation(n_led)
        jitter = rng.integers(0, jitter_us, size=n_led, endpoint=True)
        onsets = [0] * n_led
        for slot, pos in enumerate(perm):
            onsets[config.entries[pos].led_id] = slot * slot_us + int(jitter[slot])
        schedules.append(FlashSchedule(k, tuple(onsets), config.flash_duration_ms))
        start = origin + k * epoch_us
        for pos in perm:
            e = config.entries[pos]
            markers.append(MarkerEvent(e.marker, start + onsets[e.led_id]))
    return schedules, markers


def serial_marker_bytes(markers: Sequence[MarkerEvent]) -> bytes:
    """Markers as they would leave the controller: one ASCII byte each."""
    return "".join(m.code for m in markers).encode("ascii")


def serial_metadata() -> dict:
    return {
        "baud": SERIAL_BAUD,
        "frame_bits": SERIAL_FRAME_BITS,
        "byte_time_us": SERIAL_FRAME_BITS * 1e6 / SERIAL_BAUD,
    }


@dataclass(frozen=True)
class SynthConfig:
    attended: Optional[tuple] = None  # LED id per epoch; None draws from the seed
    ssvep_amplitude: float = 2.0
    harmonic_ratio: float = 0.5
    p300_amplitude: float = 5.0
    p300_latency_ms: float = 350.0
    p300_width_ms: float = 200.0
    noise_sigma: float = 2.0
    line_noise_amplitude: float = 5.0
    line_frequency: float = 50.0
    tail_ms: float = 600.0
    seed: int = 0

    def __post_init__(self):
        for name in ("ssvep_amplitude", "harmonic_ratio", "p300_amplitude", "noise_sigma",
                     "line_noise_amplitude", "p300_width_ms", "tail_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 < self.p300_latency_ms < 600:
            raise ValueError("p300_latency_ms must lie in (0, 600)")


def scripted_intent(epoch_count: int, seed: int, n_led: int = 4) -> tuple:
    rng = _rng(seed, _INTENT)
    return tuple(int(i) for i in rng.integers(0, n_led, size=epoch_count))


@dataclass
class Simulation:
    recording: Recording
    markers: list
    attended: tuple
    schedules: list
    toggles: dict = field(default_factory=dict)


def _half_cosine(t_ms, center, width):
    out = np.zeros_like(t_ms)
    inside = np.abs(t_ms - center) <= width / 2
    out[inside] = np.cos(np.pi * (t_ms[inside] - center) / width)
    return out


def synthesize_eeg(
    schedules: Sequence[FlashSchedule],
    toggles: Optional[dict],
    synth: SynthConfig,
    config: Optional[StimulusConfig] = None,
) -> tuple:
    """Render the recording and marker stream for a flash schedule.

    Occipital sites carry the attended LED's flicker (fundamental plus second
    harmonic), the midline sites Fz/Cz/Pz carry a half-cosine P300 after the
    attended LED's flash, and every channel gets white noise and mains hum.
    ``toggles`` maps LED id to its :class:`ToggleStream`; the flicker then
    uses the tick-quantised frequency rather than the nominal one.
    """
    config = check_config(config or StimulusConfig())
    n_epochs = len(schedules)
    attended = synth.attended
    if attended is None:
        attended = scripted_intent(n_epochs, synth.seed, len(config.entries))
    if len(attended) != n_epochs:
        raise ValueError("need one attended LED per epoch")
    led_ids = {e.led_id for e in config.entries}
    for a in attended:
        if a not in led_ids:
            raise ValueError(f"attended LED {a} is not configured")

    period_us = config.sample_period_us
    epoch_us = config.epoch_us
    if epoch_us % period_us or config.epoch_offset_us % period_us:
        raise ValueError("epoch length and offset must be whole sample periods")
    per_epoch = epoch_us // period_us
    n_lead = config.epoch_offset_us // period_us
    n_tail = int(round(synth.tail_ms * 1000)) // period_us
    n_total = n_lead + n_epochs * per_epoch + n_tail
    ts = np.arange(n_total, dtype=np.int64) * period_us
    t = ts / 1e6
    data = np.zeros((n_total, len(CHANNELS)))

    occipital = [CHANNELS.index(c) for c in ("PO7", "PO8", "Oz")]
    midline = [CHANNELS.index(c) for c in ("Fz", "Cz", "Pz")]
    markers = []
    t_ms_all = ts / 1000.0

    for k, sched in enumerate(schedules):
        lo = n_lead + k * per_epoch
        hi = lo + per_epoch
        led = attended[k]
        f = config.by_led(led).frequency
        if toggles and led in toggles:
            f = toggles[led].achieved_frequency
        tt = t[lo:hi]
        ssvep = synth.ssvep_amplitude * (
            np.sin(2 * np.pi * f * tt) + synth.harmonic_ratio * np.sin(4 * np.pi * f * tt)
        )
        data[lo:hi, occipital] += ssvep[:, None]

        start_us = config.epoch_offset_us + k * epoch_us
        for led_id in sched.order():
            e = config.by_led(led_id)
            onset = start_us + sched.onsets_us[led_id]
            markers.append(MarkerEvent(e.marker, onset))
            if led_id == led and synth.p300_amplitude > 0:
                center = onset / 1000.0 + synth.p300_latency_ms
                bump = synth.p300_amplitude * _half_cosine(t_ms_all, center, synth.p300_width_ms)
                data[:, midline] += bump[:, None]

        rng = _rng(synth.seed, _NOISE, k)
        data[lo:hi] += synth.noise_sigma * rng.standard_normal((per_epoch, len(CHANNELS)))

    # lead-in and tail: noise only, own substreams
    for seg, (lo, hi) in enumerate([(0, n_lead), (n_total - n_tail, n_total)]):
        if hi > lo:
            rng = _rng(synth.seed, _EDGE, seg)
            data[lo:hi] += synth.noise_sigma * rng.standard_normal((hi - lo, len(CHANNELS)))

    line = synth.line_noise_amplitude * np.sin(2 * np.pi * synth.line_frequency * t)
    data += line[:, None]
    return Recording(ts, data), markers


def simulate(
    epoch_count: int,
    synth: Optional[SynthConfig] = None,
    config: Optional[StimulusConfig] = None,
) -> Simulation:
    """Schedule flicker and flashes, then synthesise the matching recording."""
    synth = synth or SynthConfig()
    config = check_config(config or StimulusConfig())
    schedules, _ = schedule_flashes(epoch_count, synth.seed, config)
    duration = (config.epoch_offset_ms + epoch_count * config.p300_epoch_ms + synth.tail_ms) / 1000
    toggles = {
        e.led_id: schedule_ssvep(e.frequency, duration, led_id=e.led_id) for e in config.entries
    }
    attended = synth.attended
    if attended is None:
        attended = scripted_intent(epoch_count, synth.seed, len(config.entries))
    recording, markers = synthesize_eeg(schedules, toggles, replace(synth, attended=tuple(attended)),
                                        config)
    return Simulation(recording, markers, tuple(attended), schedules, toggles)
