"""SSVEP/P300 fusion, command dispatch and auditory feedback events."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import IO, Optional

from .core import Command, Decision, ProtocolError, StimulusConfig
from .spectral import SsvepFeature, ssvep_argmax

log = logging.getLogger(__name__)

PULSE_FREQUENCY_HZ = 1000.0
PULSE_DURATION_MS = 200.0
INTER_PULSE_GAP_MS = 100.0


class SinkError(IOError):
    """The command sink could not take a message."""


@dataclass(frozen=True)
class FeedbackEvent:
    kind: str
    pulses: int
    timestamp: int = 0
    pulse_frequency: float = PULSE_FREQUENCY_HZ
    pulse_duration_ms: float = PULSE_DURATION_MS
    inter_pulse_gap_ms: Optional[float] = None

    @classmethod
    def success(cls, timestamp=0):
        return cls("Success", 1, timestamp)

    @classmethod
    def failure(cls, timestamp=0):
        return cls("Failure", 2, timestamp, inter_pulse_gap_ms=INTER_PULSE_GAP_MS)

    def pulse_schedule_ms(self):
        """(onset, duration) of each tone relative to ``timestamp``."""
        step = self.pulse_duration_ms + (self.inter_pulse_gap_ms or 0.0)
        return [(i * step, self.pulse_duration_ms) for i in range(self.pulses)]


@dataclass(frozen=True)
class CommandMessage:
    command: Command
    sequence_number: int
    issued_at: int = 0

    def wire(self) -> str:
        return f"{self.sequence_number},{self.command.value}\n"


class MemorySink:
    """Records every message; stands in for the robot."""

    def __init__(self):
        self.messages = []

    def send(self, message: CommandMessage):
        self.messages.append(message)
        return True


class LineSink:
    """Writes ``SEQ,COMMAND\\n`` lines to a text or byte stream."""

    def __init__(self, stream: IO):
        self.stream = stream

    def send(self, message: CommandMessage):
        line = message.wire()
        try:
            self.stream.write(line)
        except TypeError:
            self.stream.write(line.encode("ascii"))
        self.stream.flush()
        return True


def map_to_command(frequency: float, config: StimulusConfig) -> Command:
    try:
        return config.by_frequency(frequency).command
    except KeyError:
        raise KeyError(f"unknown frequency {frequency:g} Hz") from None


def decide(
    features: SsvepFeature,
    p300_winner: Optional[str],
    config: StimulusConfig,
    gate: bool = True,
    decided_at: int = 0,
    epoch_index: int = 0,
) -> Decision:
    """Issue a command only when the P300 winner confirms the SSVEP winner.

    ``gate=False`` is the SSVEP-only diagnostic mode: the command follows the
    spectral winner regardless of the P300 evidence.
    """
    missing = set(config.frequencies) - set(features.frequencies)
    if missing:
        raise ValueError(f"features missing configured frequencies {sorted(missing)}")
    if p300_winner is not None:
        try:
            config.by_marker(p300_winner)
        except KeyError:
            raise ProtocolError(f"P300 winner {p300_winner!r} is not a configured marker") from None
    f_win, _ = ssvep_argmax(features)
    entry = config.by_frequency(f_win)
    agreement = p300_winner == entry.marker
    if agreement or not gate:
        command = entry.command
    else:
        command = Command.NO_DECISION
    reason = "" if command is not Command.NO_DECISION else (
        "no valid P300" if p300_winner is None else "disagreement"
    )
    return Decision(f_win, p300_winner, agreement, command, decided_at, epoch_index, gate, reason)


def no_decision(epoch_index: int, reason: str, decided_at: int = 0) -> Decision:
    return Decision(None, None, False, Command.NO_DECISION, decided_at, epoch_index, True, reason)


class Dispatcher:
    """Sends commands to a sink and produces one feedback event per decision."""

    def __init__(self, sink, first_sequence: int = 1):
        self.sink = sink
        self.next_sequence = first_sequence
        self.errors = []

    def dispatch(self, decision: Decision):
        if decision.command is Command.NO_DECISION:
            return None, FeedbackEvent.failure(decision.decided_at)
        msg = CommandMessage(decision.command, self.next_sequence, decision.decided_at)
        try:
            acked = self.sink.send(msg)
            if acked is False:
                raise SinkError("sink did not acknowledge")
        except Exception as exc:  # any transport fault becomes a failed command
            log.error("command %d (%s) not delivered: %s", msg.sequence_number, msg.command, exc)
            self.errors.append(str(exc))
            return None, FeedbackEvent.failure(decision.decided_at)
        self.next_sequence += 1
        return msg, FeedbackEvent.success(decision.decided_at)


def dispatch(decision: Decision, sink, sequence_number: int = 1):
    """One-shot form of :meth:`Dispatcher.dispatch`."""
    return Dispatcher(sink, sequence_number).dispatch(decision)


class EpochFuser:
    """Joins per-epoch SSVEP features and P300 winners arriving in any order.

    Decisions come out strictly in epoch order, starting at ``first_epoch``.
    """

    def __init__(self, config: StimulusConfig, gate: bool = True, first_epoch: int = 0):
        self.config = config
        self.gate = gate
        self.next_epoch = first_epoch
        self._features = {}
        self._p300 = {}
        self._ready = {}

    def add_features(self, epoch: int, features: SsvepFeature, decided_at: int = 0):
        self._features[epoch] = (features, decided_at)
        return self._drain()

    def add_p300(self, epoch: int, winner: Optional[str]):
        self._p300[epoch] = winner
        return self._drain()

    def add_decision(self, decision: Decision):
        """Inject a finished decision (e.g. a truncated epoch)."""
        self._ready[decision.epoch_index] = decision
        return self._drain()

    def _drain(self):
        out = []
        while True:
            k = self.next_epoch
            if k in self._ready:
                out.append(self._ready.pop(k))
            elif k in self._features and k in self._p300:
                feats, at = self._features.pop(k)
                out.append(decide(feats, self._p300.pop(k), self.config, self.gate, at, k))
            else:
                return out
            self.next_epoch += 1
