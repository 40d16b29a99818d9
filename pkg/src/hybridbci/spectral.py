"""Welch PSD and SSVEP band features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CHANNELS, StimulusConfig

DEFAULT_SEGMENT = 500
DEFAULT_OVERLAP = 0.5
DEFAULT_HALF_WIDTH = 0.5


def hamming(n: int) -> np.ndarray:
    """Periodic Hamming window (the DFT-even form used for spectral analysis)."""
    return 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(n) / n)


WINDOWS = {"hamming": hamming, "boxcar": np.ones}


@dataclass(frozen=True)
class PsdEstimate:
    frequencies: np.ndarray
    power: np.ndarray
    segment_length: int
    overlap: float
    window: str
    n_segments: int = 1

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


def welch_psd(
    x,
    fs: float = 250.0,
    segment_length: int = DEFAULT_SEGMENT,
    overlap: float = DEFAULT_OVERLAP,
    window: str = "hamming",
) -> PsdEstimate:
    """One-sided Welch PSD in units of x**2 / Hz.

    Segments are hopped by ``segment_length * (1 - overlap)`` samples; a
    trailing partial segment is dropped. No detrending is applied. The
    scaling makes ``sum(power) * df`` match the signal's mean square.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("welch_psd expects a 1-D signal")
    if not 0 <= overlap < 1:
        raise ValueError(f"overlap must lie in [0, 1), got {overlap}")
    n = int(segment_length)
    if n < 2:
        raise ValueError("segment length must be at least 2")
    if x.size < n:
        raise ValueError(f"signal of {x.size} samples is shorter than one segment ({n})")
    w = WINDOWS[window](n)
    hop = max(1, int(round(n * (1 - overlap))))
    starts = np.arange(0, x.size - n + 1, hop)
    segs = x[starts[:, None] + np.arange(n)] * w
    spec = np.abs(np.fft.rfft(segs, axis=1)) ** 2
    p = spec.mean(axis=0) / (fs * np.sum(w * w))
    # fold negative frequencies; DC and (even n) Nyquist appear once
    if n % 2:
        p[1:] *= 2
    else:
        p[1:-1] *= 2
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    return PsdEstimate(freqs, p, n, float(overlap), window, len(starts))


@dataclass(frozen=True)
class SsvepFeature:
    """Peak PSD value inside each configured frequency band."""

    frequencies: tuple
    powers: tuple
    window_us: tuple = (0, 0)

    def as_dict(self):
        return dict(zip(self.frequencies, self.powers))


def extract_ssvep_features(
    psd: PsdEstimate,
    config: StimulusConfig,
    half_width: float = DEFAULT_HALF_WIDTH,
    window_us: tuple = (0, 0),
) -> SsvepFeature:
    freqs = psd.frequencies
    # tolerance keeps bins that sit exactly on a band edge inside the band
    eps = 1e-9 * max(1.0, float(freqs[-1]))
    powers = []
    for f in config.frequencies:
        if f - half_width < freqs[0] - eps or f + half_width > freqs[-1] + eps:
            raise ValueError(f"PSD does not cover {f:g} +/- {half_width:g} Hz")
        band = (freqs >= f - half_width - eps) & (freqs <= f + half_width + eps)
        if band.sum() < 2:
            raise ValueError(
                f"PSD resolution {psd.resolution:g} Hz is too coarse for a "
                f"+/-{half_width:g} Hz band"
            )
        powers.append(float(psd.power[band].max()))
    return SsvepFeature(tuple(config.frequencies), tuple(powers), window_us)


def ssvep_argmax(features: SsvepFeature) -> tuple:
    """Winning frequency and its power ratio over the runner-up.

    Ties go to the lowest frequency. The margin is ``inf`` when the runner-up
    has zero power, and 1.0 if everything is zero.
    """
    if not features.frequencies:
        raise ValueError("no features")
    order = sorted(zip(features.frequencies, features.powers), key=lambda fp: (-fp[1], fp[0]))
    win_f, win_p = order[0]
    if len(order) == 1:
        return win_f, float("inf")
    runner = order[1][1]
    if runner > 0:
        margin = win_p / runner
    else:
        margin = 1.0 if win_p == 0 else float("inf")
    return win_f, margin


def ssvep_channel(data: np.ndarray, channels: Optional[tuple] = None) -> np.ndarray:
    """Average of the occipital sites (PO7, PO8, Oz) feeding SSVEP analysis."""
    names = channels or ("PO7", "PO8", "Oz")
    idx = [CHANNELS.index(c) for c in names]
    return np.asarray(data)[:, idx].mean(axis=1)
