"""
When the previous epoch leaks into the baseline
===============================================

Flashes are at least 400 ms apart, but a P300 lasts until about 450 ms after
its flash. If the last flash of one epoch and the first flash of the next
are both attended, the first bump sits inside the second flash's
[-200, 0) ms baseline and the baseline-corrected peak shrinks.
"""

import numpy as np

from hybridbci import StimulusConfig, SynthConfig, decode, simulate
from hybridbci.erp import baseline_correct, detect_p300, extract_epoch
from hybridbci.pipeline import filtered_p300, intents_for

config = StimulusConfig()
for seed in range(30):
    sim = simulate(20, SynthConfig(seed=seed, noise_sigma=0.0), config)
    ds = decode(sim.recording, sim.markers, config)
    intents = intents_for(sim.attended, config)
    missed = [k for k, (d, c) in enumerate(zip(ds, intents)) if d.command != c]
    if missed:
        break

k = missed[0]
print(f"seed {seed}: noise-free, yet epoch {k} was missed ({ds[k].reason})")
prev, first = sim.markers[4 * k - 1], sim.markers[4 * k]
print(f"previous flash {prev.code!r} and this flash {first.code!r} are "
      f"{(first.timestamp - prev.timestamp) / 1000:.0f} ms apart, both attended")

x = filtered_p300(sim.recording, config)
raw = extract_epoch(sim.recording.timestamps, x, first, config)
det = detect_p300(baseline_correct(raw))
print(f"baseline mean {raw.samples[:raw.n_pre].mean():.2f} uV, corrected peak "
      f"{det.peak_amplitude:.2f} uV at {det.peak_latency:g} ms (threshold 2 uV)")
print(f"raw peak without baseline removal: {np.max(raw.samples[122:176]):.2f} uV")
