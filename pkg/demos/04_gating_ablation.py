"""
What the P300 gate buys
=======================

Remove the P300 from the synthetic data entirely: a gated decoder must stay
silent, while SSVEP-only decoding keeps issuing commands. Then sweep the
noise level to see how accuracy degrades with the gate on.
"""

from hybridbci import DecoderSettings, StimulusConfig, SynthConfig, decode, simulate
from hybridbci.core import Command
from hybridbci.pipeline import accuracy, intents_for

config = StimulusConfig()
sim = simulate(100, SynthConfig(seed=7, p300_amplitude=0.0))
for gate in (True, False):
    ds = decode(sim.recording, sim.markers, config, DecoderSettings(gate=gate))
    issued = sum(d.command is not Command.NO_DECISION for d in ds)
    print(f"no P300 in the data, gate={gate!s:5}: {issued}/100 commands issued")

print("\nnoise sigma (uV)   gated accuracy   SSVEP-only accuracy")
for sigma in (0.0, 2.0, 4.0, 6.0, 8.0):
    sim = simulate(100, SynthConfig(seed=7, noise_sigma=sigma))
    intents = intents_for(sim.attended, config)
    a = accuracy(decode(sim.recording, sim.markers), intents)
    b = accuracy(decode(sim.recording, sim.markers, settings=DecoderSettings(gate=False)), intents)
    print(f"{sigma:10.1f} {a:16.2f} {b:21.2f}")
