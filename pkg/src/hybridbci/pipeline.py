"""Streaming decode: notch -> (bandpass -> Welch) + (low-pass -> epochs) -> fusion.

Samples are pushed in blocks of any size; a decision for stimulation epoch
``k`` is released as soon as the stream reaches the end of that epoch plus
the post-stimulus span of its last flash. Only the samples still needed by
pending epochs are buffered.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import erp, filters, spectral
from .core import (
    MarkerEvent,
    ProtocolError,
    Recording,
    StimulusConfig,
    check_config,
    check_monotonic,
)
from .decoder import Dispatcher, EpochFuser, MemorySink, no_decision

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecoderSettings:
    gate: bool = True
    notch: bool = True
    notch_frequency: float = 50.0
    notch_q: float = 30.0
    bandpass: tuple = (6.5, 30.0)
    bandpass_order: int = 4
    lowpass: float = 15.0
    lowpass_order: int = 4
    segment_length: int = spectral.DEFAULT_SEGMENT
    overlap: float = spectral.DEFAULT_OVERLAP
    half_width: float = spectral.DEFAULT_HALF_WIDTH
    p300_channels: str = "midline"
    threshold: float = erp.DEFAULT_THRESHOLD
    threshold_mode: str = "absolute"
    threshold_k: float = erp.DEFAULT_K


def build_designs(settings: DecoderSettings, fs: float):
    return (
        filters.design_notch(settings.notch_frequency, fs, settings.notch_q),
        filters.design_bandpass(*settings.bandpass, settings.bandpass_order, fs),
        filters.design_lowpass(settings.lowpass, settings.lowpass_order, fs),
    )


class StreamingDecoder:
    def __init__(self, config: Optional[StimulusConfig] = None,
                 settings: Optional[DecoderSettings] = None, sink=None):
        self.config = check_config(config or StimulusConfig())
        self.settings = settings or DecoderSettings()
        fs = self.config.sample_rate
        notch, bandpass, lowpass = build_designs(self.settings, fs)
        self._notch = notch.new_state(6) if self.settings.notch else None
        self._bandpass = bandpass.new_state()
        self._lowpass = lowpass.new_state()
        self.fuser = EpochFuser(self.config, self.settings.gate)
        self.dispatcher = Dispatcher(sink if sink is not None else MemorySink())
        self.feedback = []
        self.messages = []
        self.decisions = []

        self._epoch_us = self.config.epoch_us
        self._origin = self.config.epoch_offset_us
        self._pre_us = int(erp.PRE_MS * 1000)
        self._post_us = int(erp.POST_MS * 1000)
        self._ts = np.zeros(0, dtype=np.int64)
        self._ssvep = np.zeros(0)
        self._p300 = np.zeros(0)
        self._last_t = None
        self._markers = {}
        self._last_marker_t = None
        self._next = 0  # next epoch to finalise
        self._max_epoch = -1

    # -- inputs ---------------------------------------------------------------

    def epoch_of(self, t_us: int) -> int:
        return (t_us - self._origin) // self._epoch_us

    def epoch_start(self, k: int) -> int:
        return self._origin + k * self._epoch_us

    def add_markers(self, markers: Iterable[MarkerEvent]):
        for m in markers:
            if self._last_marker_t is not None and m.timestamp < self._last_marker_t:
                raise ProtocolError(f"marker at {m.timestamp} us arrives out of order")
            self._last_marker_t = m.timestamp
            k = self.epoch_of(m.timestamp)
            if k < self._next:
                log.warning("marker %r at %d us belongs to a closed epoch; ignored", m.code, m.timestamp)
                continue
            self._markers.setdefault(k, []).append(m)
            self._max_epoch = max(self._max_epoch, k)

    def push(self, block: Recording) -> list:
        """Filter a block of samples and return any decisions it completes."""
        if len(block) == 0:
            return []
        check_monotonic(block.timestamps, self._last_t)
        self._last_t = int(block.timestamps[-1])
        data = block.data
        if self._notch is not None:
            data = self._notch.apply_batch(data)
        ssvep = self._bandpass.apply_batch(spectral.ssvep_channel(data))
        p300 = self._lowpass.apply_batch(erp.p300_signal(data, self.settings.p300_channels))
        self._ts = np.concatenate([self._ts, block.timestamps])
        self._ssvep = np.concatenate([self._ssvep, ssvep])
        self._p300 = np.concatenate([self._p300, p300])
        out = []
        while self._next <= self._max_epoch and self._last_t >= self._ready_at(self._next):
            out += self._finalise(self._next)
        self._trim()
        return out

    def finish(self) -> list:
        """Close every pending epoch; incomplete ones become truncated NoDecisions."""
        out = []
        while self._next <= self._max_epoch:
            out += self._finalise(self._next)
        return out

    # -- internals ------------------------------------------------------------

    def _ready_at(self, k: int) -> int:
        return self.epoch_start(k + 1) + self._post_us

    def _trim(self):
        keep_from = self.epoch_start(self._next) - self._pre_us - self.config.sample_period_us
        i = int(np.searchsorted(self._ts, keep_from))
        if i:
            self._ts, self._ssvep, self._p300 = self._ts[i:], self._ssvep[i:], self._p300[i:]

    def _finalise(self, k: int) -> list:
        self._next = k + 1
        at = self._last_t if self._last_t is not None else 0
        markers = self._markers.pop(k, [])
        if not markers:
            return self._emit(self.fuser.add_decision(no_decision(k, "no markers", at)))
        try:
            features = self._features(k)
            winner = self._p300_winner(markers)
        except erp.TruncatedEpochError as exc:
            log.info("epoch %d truncated: %s", k, exc)
            return self._emit(self.fuser.add_decision(no_decision(k, "truncated", at)))
        except ProtocolError as exc:
            log.warning("epoch %d: %s", k, exc)
            return self._emit(self.fuser.add_decision(no_decision(k, f"protocol: {exc}", at)))
        out = self.fuser.add_p300(k, winner)
        out += self.fuser.add_features(k, features, at)
        return self._emit(out)

    def _features(self, k: int) -> spectral.SsvepFeature:
        lo_t, hi_t = self.epoch_start(k), self.epoch_start(k + 1)
        lo, hi = np.searchsorted(self._ts, [lo_t, hi_t])
        expected = self._epoch_us // self.config.sample_period_us
        if hi - lo != expected:
            raise erp.TruncatedEpochError(
                f"SSVEP window has {hi - lo} of {expected} samples"
            )
        psd = spectral.welch_psd(
            self._ssvep[lo:hi], self.config.sample_rate, self.settings.segment_length,
            self.settings.overlap,
        )
        return spectral.extract_ssvep_features(psd, self.config, self.settings.half_width,
                                               (lo_t, hi_t))

    def _p300_winner(self, markers) -> Optional[str]:
        s = self.settings
        detections = []
        for m in markers:
            epoch = erp.extract_epoch(self._ts, self._p300, m, self.config)
            epoch = erp.baseline_correct(epoch)
            detections.append(erp.detect_p300(epoch, self.config.p300_window_ms, s.threshold,
                                              s.threshold_mode, s.threshold_k))
        return erp.select_p300_winner(detections)

    def _emit(self, decisions) -> list:
        for d in decisions:
            msg, fb = self.dispatcher.dispatch(d)
            if msg is not None:
                self.messages.append(msg)
            self.feedback.append(fb)
            self.decisions.append(d)
        return list(decisions)


def decode(
    recording: Recording,
    markers,
    config: Optional[StimulusConfig] = None,
    settings: Optional[DecoderSettings] = None,
    chunk_size: int = 250,
    sink=None,
) -> list:
    """Replay a whole recording through :class:`StreamingDecoder`."""
    dec = StreamingDecoder(config, settings, sink)
    markers = list(markers)
    mi = 0
    out = []
    for i in range(0, len(recording), chunk_size):
        ts = recording.timestamps[i : i + chunk_size]
        # hand over every marker up to the end of this block first
        j = mi
        while j < len(markers) and markers[j].timestamp <= ts[-1]:
            j += 1
        dec.add_markers(markers[mi:j])
        mi = j
        out += dec.push(Recording(ts, recording.data[i : i + chunk_size]))
    dec.add_markers(markers[mi:])
    out += dec.finish()
    return out


def accuracy(decisions, intents) -> float:
    if len(decisions) != len(intents):
        raise ValueError("decision and intent counts differ")
    hits = sum(d.command == c for d, c in zip(decisions, intents))
    return hits / len(intents)


def intents_for(attended, config: StimulusConfig):
    return [config.by_led(a).command for a in attended]


def filtered_ssvep(recording: Recording, config: StimulusConfig,
                   settings: Optional[DecoderSettings] = None, notch: bool = True) -> np.ndarray:
    """Notch + bandpass applied causally to the occipital average of a recording."""
    settings = settings or DecoderSettings()
    n, bp, _ = build_designs(settings, config.sample_rate)
    data = n.new_state(6).apply_batch(recording.data) if notch else recording.data
    return bp.new_state().apply_batch(spectral.ssvep_channel(data))


def filtered_p300(recording: Recording, config: StimulusConfig,
                  settings: Optional[DecoderSettings] = None, notch: bool = True) -> np.ndarray:
    settings = settings or DecoderSettings()
    n, _, lp = build_designs(settings, config.sample_rate)
    data = n.new_state(6).apply_batch(recording.data) if notch else recording.data
    return lp.new_state().apply_batch(erp.p300_signal(data, settings.p300_channels))

