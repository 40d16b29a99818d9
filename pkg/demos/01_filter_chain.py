"""
The three filters of the decoder
================================

Mains notch, SSVEP bandpass and P300 low-pass, with their response at the
frequencies that matter for this pipeline.
"""

import numpy as np

from hybridbci.filters import design_bandpass, design_lowpass, design_notch, frequency_response

FS = 250.0

notch = design_notch(50.0, FS, quality=30.0)
bandpass = design_bandpass(6.5, 30.0, order=4, fs=FS)
lowpass = design_lowpass(15.0, order=4, fs=FS)

# each design is a cascade of normalised biquads
for d in (notch, bandpass, lowpass):
    print(f"{d.description}: {d.n_sections} section(s)")

# magnitude at the flicker frequencies, the cutoffs and the mains line
probe = np.array([4.0, 6.5, 7.0, 8.0, 9.0, 10.0, 15.0, 30.0, 48.3, 50.0, 51.7])
print("\n  f (Hz)   notch    bandpass  lowpass   (dB)")
for f, a, b, c in zip(probe, *(frequency_response(d, probe)[0] for d in (notch, bandpass, lowpass))):
    print(f"{f:7.1f} {a:8.2f} {b:9.2f} {c:9.2f}")

# streaming: feeding samples one by one gives the batch result exactly
x = np.random.default_rng(0).normal(size=500)
state = bandpass.new_state()
one_by_one = np.array([state.apply(v) for v in x])
print("\nper-sample == batch:", np.array_equal(one_by_one, bandpass.new_state().apply_batch(x)))
