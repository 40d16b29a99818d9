"""Butterworth bandpass/low-pass and notch designs as cascaded biquads.

Designs go through the analog prototype and a bilinear transform with the
cutoffs prewarped, so the -3.01 dB points land exactly on the requested
frequencies. Streaming state is per-section transposed direct form II memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

__all__ = [
    "FilterDesign",
    "FilterState",
    "design_bandpass",
    "design_lowpass",
    "design_notch",
    "identity_design",
    "frequency_response",
    "poles",
    "is_stable",
]

# magnitude floor so exact transmission zeros report a finite dB value
_MAG_FLOOR = 1e-15


@dataclass(frozen=True)
class FilterDesign:
    """Immutable SOS cascade; rows are ``(b0, b1, b2, 1, a1, a2)``."""

    sos: np.ndarray
    fs: float
    description: str = ""

    def __post_init__(self):
        sos = np.array(self.sos, dtype=np.float64).reshape(-1, 6)
        if not np.allclose(sos[:, 3], 1.0):
            raise ValueError("sections must be normalised so a0 == 1")
        sos.setflags(write=False)
        object.__setattr__(self, "sos", sos)

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    def new_state(self, n_channels: int | None = None) -> "FilterState":
        return FilterState(self, n_channels)


class FilterState:
    """Delay memory for one stream driven through one design.

    Single owner: one stream advances a given state. ``n_channels=None`` runs
    a scalar stream, otherwise input blocks are ``(n, n_channels)``.
    """

    def __init__(self, design: FilterDesign, n_channels: int | None = None):
        self.design = design
        self.n_channels = n_channels
        self.reset()

    def reset(self):
        shape = (self.design.n_sections, 2)
        if self.n_channels is not None:
            shape += (self.n_channels,)
        self.zi = np.zeros(shape)

    def apply(self, value):
        """Filter one sample (a scalar, or one value per channel)."""
        x = np.asarray(value, dtype=np.float64)[np.newaxis]
        y = self.apply_batch(x)
        return float(y[0]) if self.n_channels is None else y[0]

    def apply_batch(self, values) -> np.ndarray:
        """Filter a block; identical to calling :meth:`apply` on each sample."""
        x = np.asarray(values, dtype=np.float64)
        if x.shape[0] == 0:
            return x.copy()
        y, self.zi = signal.sosfilt(self.design.sos.copy(), x, axis=0, zi=self.zi)
        return y


def identity_design(fs: float = 250.0) -> FilterDesign:
    return FilterDesign(np.array([[1.0, 0, 0, 1.0, 0, 0]]), fs, "identity")


def _prewarp(f, fs):
    return 2.0 * fs * math.tan(math.pi * f / fs)


def _butter_prototype(order):
    k = np.arange(1, order + 1)
    return np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))


def _bilinear(s, fs):
    return (2.0 * fs + s) / (2.0 * fs - s)


def _sections_from_poles(zpoles, numerators):
    """Pair conjugate digital poles into biquads with the given numerators."""
    upper = sorted((p for p in zpoles if p.imag > 0), key=abs)
    if 2 * len(upper) != len(zpoles):
        raise ValueError("odd pole count is not supported")
    rows = []
    for p, b in zip(upper, numerators):
        rows.append([*b, 1.0, -2.0 * p.real, abs(p) ** 2])
    return np.array(rows)


def _normalise(sos, fs, freq):
    """Scale sections evenly so that |H(freq)| == 1."""
    mag = abs(_response(sos, fs, np.array([freq]))[0])
    g = mag ** (-1.0 / sos.shape[0])
    sos = sos.copy()
    sos[:, :3] *= g
    return sos


def design_bandpass(low: float, high: float, order: int = 4, fs: float = 250.0) -> FilterDesign:
    """Butterworth bandpass from an ``order``-pole low-pass prototype.

    The result has ``2*order`` poles, i.e. ``order`` biquads, each with zeros
    at DC and Nyquist.
    """
    if order < 2 or order % 2:
        raise ValueError(f"order must be a positive even integer, got {order}")
    if not 0 < low < high:
        raise ValueError(f"need 0 < low < high, got ({low}, {high})")
    if high >= fs / 2:
        raise ValueError(f"high cutoff {high} Hz is not below Nyquist {fs / 2} Hz")
    wl, wh = _prewarp(low, fs), _prewarp(high, fs)
    bw, w0 = wh - wl, math.sqrt(wl * wh)
    spoles = []
    for p in _butter_prototype(order):
        half = p * bw / 2
        root = np.sqrt(half * half - w0 * w0)
        spoles += [half + root, half - root]
    zpoles = _bilinear(np.array(spoles), fs)
    sos = _sections_from_poles(zpoles, [(1.0, 0.0, -1.0)] * order)
    center = fs / math.pi * math.atan(w0 / (2 * fs))
    sos = _normalise(sos, fs, center)
    return FilterDesign(sos, fs, f"butterworth bandpass {low:g}-{high:g} Hz order {order}")


def design_lowpass(cutoff: float, order: int = 4, fs: float = 250.0) -> FilterDesign:
    if order < 2 or order % 2:
        raise ValueError(f"order must be a positive even integer, got {order}")
    if not 0 < cutoff < fs / 2:
        raise ValueError(f"cutoff {cutoff} Hz must lie in (0, {fs / 2}) Hz")
    wc = _prewarp(cutoff, fs)
    zpoles = _bilinear(wc * _butter_prototype(order), fs)
    sos = _sections_from_poles(zpoles, [(1.0, 2.0, 1.0)] * (order // 2))
    sos = _normalise(sos, fs, 0.0)
    return FilterDesign(sos, fs, f"butterworth lowpass {cutoff:g} Hz order {order}")


def design_notch(center: float, fs: float = 250.0, quality: float = 30.0) -> FilterDesign:
    """Second-order notch with -3 dB bandwidth ``center / quality``."""
    if not 0 < center < fs / 2:
        raise ValueError(f"notch frequency {center} Hz must lie in (0, {fs / 2}) Hz")
    if quality <= 0:
        raise ValueError("quality factor must be positive")
    w0 = 2 * math.pi * center / fs
    bw = w0 / quality
    g = 1.0 / (1.0 + math.tan(bw / 2))
    c = math.cos(w0)
    sos = np.array([[g, -2 * g * c, g, 1.0, -2 * g * c, 2 * g - 1]])
    return FilterDesign(sos, fs, f"notch {center:g} Hz Q {quality:g}")


def _response(sos, fs, freqs):
    z1 = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / fs)
    h = np.ones_like(z1)
    for b0, b1, b2, _, a1, a2 in sos:
        h *= (b0 + b1 * z1 + b2 * z1 * z1) / (1.0 + a1 * z1 + a2 * z1 * z1)
    return h


def frequency_response(design: FilterDesign, freq):
    """Magnitude (dB) and phase (rad) of the cascade at ``freq`` Hz.

    Accepts a scalar or an array; frequencies above Nyquist are rejected.
    """
    f = np.asarray(freq, dtype=float)
    if np.any(f < 0) or np.any(f > design.fs / 2 + 1e-9):
        raise ValueError(f"frequency must lie in [0, {design.fs / 2}] Hz")
    h = _response(design.sos, design.fs, np.atleast_1d(f))
    mag = 20 * np.log10(np.maximum(np.abs(h), _MAG_FLOOR))
    phase = np.angle(h)
    if f.ndim == 0:
        return float(mag[0]), float(phase[0])
    return mag, phase


def poles(design: FilterDesign) -> np.ndarray:
    return np.concatenate([np.roots([1.0, a1, a2]) for *_, a1, a2 in design.sos])


def is_stable(design: FilterDesign) -> bool:
    return bool(np.all(np.abs(poles(design)) < 1.0))
