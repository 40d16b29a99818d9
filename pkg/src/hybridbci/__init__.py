"""Hybrid SSVEP + P300 brain-computer interface decoding pipeline."""

__version__ = "0.1.0"

from .core import (
    CHANNELS,
    DIRECTIONS,
    Command,
    ConfigError,
    Decision,
    LedEntry,
    MarkerEvent,
    ProtocolError,
    Recording,
    SampleFrame,
    StimulusConfig,
    StreamError,
    check_config,
    validate_config,
)
from .decoder import Dispatcher, EpochFuser, FeedbackEvent, LineSink, MemorySink, decide
from .filters import design_bandpass, design_lowpass, design_notch, frequency_response
from .pipeline import DecoderSettings, StreamingDecoder, decode
from .spectral import extract_ssvep_features, ssvep_argmax, welch_psd
from .stimulus import SynthConfig, simulate

__all__ = [
    "__version__", "CHANNELS", "DIRECTIONS", "Command", "ConfigError", "Decision", "LedEntry",
    "MarkerEvent", "ProtocolError", "Recording", "SampleFrame", "StimulusConfig", "StreamError",
    "check_config", "validate_config", "Dispatcher", "EpochFuser", "FeedbackEvent", "LineSink",
    "MemorySink", "decide", "design_bandpass", "design_lowpass", "design_notch",
    "frequency_response", "DecoderSettings", "StreamingDecoder", "decode",
    "extract_ssvep_features", "ssvep_argmax", "welch_psd", "SynthConfig", "simulate",
]
