"""Marker-locked epochs and P300 peak detection."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import CHANNELS, MarkerEvent, ProtocolError, StimulusConfig

PRE_MS = 200.0
POST_MS = 600.0
DEFAULT_THRESHOLD = 2.0
DEFAULT_K = 2.0

P300_CHANNELS = {"pz": ("Pz",), "midline": ("Fz", "Cz", "Pz")}


class TruncatedEpochError(ValueError):
    """The stream does not cover the full epoch around a marker."""


@dataclass(frozen=True)
class Epoch:
    marker_code: str
    samples: np.ndarray
    marker_timestamp: int
    fs: float = 250.0
    n_pre: int = 50
    offset_us: int = 0

    @property
    def times_ms(self) -> np.ndarray:
        return (np.arange(self.samples.size) - self.n_pre) * (1000.0 / self.fs)


@dataclass(frozen=True)
class P300Detection:
    marker_code: str
    peak_latency: float
    peak_amplitude: float
    valid: bool
    threshold: float
    marker_timestamp: int = 0


def p300_signal(data: np.ndarray, mode: str = "midline") -> np.ndarray:
    idx = [CHANNELS.index(c) for c in P300_CHANNELS[mode]]
    return np.asarray(data)[:, idx].mean(axis=1)


def epoch_sizes(fs: float, pre_ms: float = PRE_MS, post_ms: float = POST_MS):
    return int(round(pre_ms * fs / 1000)), int(round(post_ms * fs / 1000))


def extract_epoch(
    timestamps,
    values,
    marker: MarkerEvent,
    config: Optional[StimulusConfig] = None,
    pre_ms: float = PRE_MS,
    post_ms: float = POST_MS,
) -> Epoch:
    """Cut ``[-pre_ms, +post_ms]`` around the sample nearest to the marker.

    ``values`` should come from the low-pass (P300) branch. Raises
    :class:`TruncatedEpochError` instead of padding when the stream does not
    reach far enough on either side.
    """
    fs = (config or StimulusConfig()).sample_rate
    period = 1e6 / fs
    ts = np.asarray(timestamps, dtype=np.int64)
    x = np.asarray(values, dtype=np.float64)
    n_pre, n_post = epoch_sizes(fs, pre_ms, post_ms)
    if ts.size == 0:
        raise TruncatedEpochError("empty stream")

    j = int(np.searchsorted(ts, marker.timestamp))
    # nearest sample; exact half-period ties go to the earlier sample
    if j == ts.size or (j > 0 and marker.timestamp - ts[j - 1] <= ts[j] - marker.timestamp):
        j -= 1
    offset = int(marker.timestamp - ts[j])
    if abs(offset) > period / 2:
        raise TruncatedEpochError(
            f"no sample within half a period of marker {marker.code!r} at {marker.timestamp} us"
        )
    lo, hi = j - n_pre, j + n_post
    if lo < 0 or hi >= ts.size:
        raise TruncatedEpochError(
            f"stream does not cover epoch of marker {marker.code!r} at {marker.timestamp} us"
        )
    span = ts[hi] - ts[lo]
    if abs(span - (n_pre + n_post) * period) > period / 2:
        raise TruncatedEpochError(f"gap in stream around marker at {marker.timestamp} us")
    return Epoch(marker.code, x[lo : hi + 1].copy(), marker.timestamp, fs, n_pre, offset)


def baseline_correct(epoch: Epoch) -> Epoch:
    """Subtract the mean of the pre-stimulus samples."""
    if epoch.n_pre == 0:
        return epoch
    base = epoch.samples[: epoch.n_pre].mean()
    return replace(epoch, samples=epoch.samples - base)


def detect_p300(
    epoch: Epoch,
    window: tuple = (290.0, 500.0),
    threshold: float = DEFAULT_THRESHOLD,
    mode: str = "absolute",
    k: float = DEFAULT_K,
) -> P300Detection:
    """Largest sample inside ``window`` ms, judged against a threshold.

    ``mode="relative"`` replaces ``threshold`` with ``k`` times the standard
    deviation of the baseline interval.
    """
    if mode == "relative":
        threshold = k * float(np.std(epoch.samples[: epoch.n_pre]))
    elif mode != "absolute":
        raise ValueError(f"unknown threshold mode {mode!r}")
    t = epoch.times_ms
    # small slack so window edges on the sample grid are inclusive
    idx = np.flatnonzero((t >= window[0] - 1e-9) & (t <= window[1] + 1e-9))
    if idx.size == 0:
        return P300Detection(epoch.marker_code, float("nan"), float("nan"), False, threshold,
                             epoch.marker_timestamp)
    i = idx[int(np.argmax(epoch.samples[idx]))]
    amp = float(epoch.samples[i])
    valid = amp >= threshold and amp > 0
    return P300Detection(epoch.marker_code, float(t[i]), amp, valid, float(threshold),
                         epoch.marker_timestamp)


def select_p300_winner(detections: Sequence[P300Detection]) -> Optional[str]:
    """Marker with the largest valid peak, or ``None``.

    Ties are resolved by the earliest marker timestamp.
    """
    codes = [d.marker_code for d in detections]
    dup = {c for c in codes if codes.count(c) > 1}
    if dup:
        raise ProtocolError(f"duplicate marker(s) {sorted(dup)} in one stimulation epoch")
    valid = [d for d in detections if d.valid]
    if not valid:
        return None
    best = min(valid, key=lambda d: (-d.peak_amplitude, d.marker_timestamp))
    return best.marker_code


def average_epochs(epochs: Sequence[Epoch]) -> Epoch:
    if not epochs:
        raise ValueError("no epochs to average")
    data = np.mean([e.samples for e in epochs], axis=0)
    return replace(epochs[0], samples=data)
