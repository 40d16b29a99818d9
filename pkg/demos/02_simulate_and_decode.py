"""
Simulated session, decoded as a stream
======================================

Twenty 2 s stimulation epochs at the default signal-to-noise ratio, pushed
through the decoder in 1 s blocks the way a live amplifier would deliver them.
"""

from hybridbci import StimulusConfig, StreamingDecoder, SynthConfig, simulate
from hybridbci.core import Recording
from hybridbci.pipeline import intents_for

config = StimulusConfig()
sim = simulate(20, SynthConfig(seed=7), config)
rec = sim.recording
print(f"{len(rec)} samples of {rec.data.shape[1]} channels, {len(sim.markers)} flash markers")

decoder = StreamingDecoder(config)
decoder.add_markers(sim.markers)


def show(decisions):
    for d in decisions:
        print(f"epoch {d.epoch_index:2d} at {d.decided_at / 1e6:6.2f} s: SSVEP {d.ssvep_winner:g} Hz, "
              f"P300 {d.p300_winner or '-'} -> {d.command.value}")


for i in range(0, len(rec), 250):
    show(decoder.push(Recording(rec.timestamps[i:i + 250], rec.data[i:i + 250])))
# the recording stops just short of the last epoch's 600 ms post-flash span
show(decoder.finish())

intents = intents_for(sim.attended, config)
hits = sum(d.command == c for d, c in zip(decoder.decisions, intents))
print(f"\n{hits}/{len(intents)} epochs decoded as intended")
print("feedback pulses:", [f.pulses for f in decoder.feedback])
print("sent to robot:", [m.wire().strip() for m in decoder.messages][:5], "...")
