import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridbci.core import MarkerEvent, ProtocolError
from hybridbci.erp import (
    Epoch,
    P300Detection,
    TruncatedEpochError,
    average_epochs,
    baseline_correct,
    detect_p300,
    epoch_sizes,
    extract_epoch,
    p300_signal,
    select_p300_winner,
)
from hybridbci.pipeline import decode
from hybridbci.stimulus import SynthConfig, simulate

PERIOD = 4000
TS = np.arange(1000, dtype=np.int64) * PERIOD


def half_cosine_epoch(amp=5.0, peak_ms=350.0, width_ms=200.0):
    t = (np.arange(201) - 50) * 4.0
    x = np.where(np.abs(t - peak_ms) <= width_ms / 2, amp * np.cos(np.pi * (t - peak_ms) / width_ms), 0)
    return Epoch("q", x, 0)


def test_epoch_sizes():
    assert epoch_sizes(250) == (50, 150)


def test_extract_on_sample_has_zero_offset():
    x = np.arange(TS.size, dtype=float)
    ep = extract_epoch(TS, x, MarkerEvent("o", 400 * PERIOD))
    assert ep.offset_us == 0
    assert ep.samples.size == 201
    assert ep.samples[50] == 400


def test_extract_aligns_to_nearest_sample():
    x = np.arange(TS.size, dtype=float)
    ep = extract_epoch(TS, x, MarkerEvent("o", 400 * PERIOD + 1000))
    assert ep.offset_us == 1000 and ep.samples[50] == 400
    ep = extract_epoch(TS, x, MarkerEvent("o", 400 * PERIOD + 3000))
    assert ep.offset_us == -1000 and ep.samples[50] == 401
    ep = extract_epoch(TS, x, MarkerEvent("o", 400 * PERIOD + 2000))  # tie goes earlier
    assert ep.samples[50] == 400


def test_embedded_template_peaks_at_index_138():
    # 350 ms falls between the 348 and 352 ms samples; a marker 1 ms after its
    # aligned sample puts the template maximum unambiguously on 352 ms
    marker_t = 300 * PERIOD + 1000
    t_ms = (TS - marker_t) / 1000
    x = np.where(np.abs(t_ms - 350) <= 100, 5 * np.cos(np.pi * (t_ms - 350) / 200), 0.0)
    ep = extract_epoch(TS, x, MarkerEvent("q", marker_t))
    assert int(np.argmax(ep.samples)) == 50 + round(0.350 * 250) == 138


@pytest.mark.parametrize("marker_t", [10 * PERIOD, 900 * PERIOD, 2000 * PERIOD])
def test_truncated_epochs_raise(marker_t):
    with pytest.raises(TruncatedEpochError):
        extract_epoch(TS, np.zeros(TS.size), MarkerEvent("o", marker_t))


def test_gap_in_stream_is_truncation():
    ts = np.delete(TS, 420)
    with pytest.raises(TruncatedEpochError):
        extract_epoch(ts, np.zeros(ts.size), MarkerEvent("o", 400 * PERIOD))


def test_baseline_constant_becomes_zero():
    ep = baseline_correct(Epoch("o", np.full(201, 3.5), 0))
    np.testing.assert_allclose(ep.samples, 0.0, atol=1e-12)


def test_baseline_zero_mean_unchanged():
    x = np.r_[np.tile([1.0, -1.0], 25), np.linspace(0, 3, 151)]
    ep = baseline_correct(Epoch("o", x, 0))
    np.testing.assert_array_equal(ep.samples, x)


def test_baseline_mean_is_zero_after_correction():
    x = np.random.default_rng(4).normal(3, 2, size=201)
    ep = baseline_correct(Epoch("o", x, 0))
    assert abs(ep.samples[:50].mean()) < 1e-12
    np.testing.assert_allclose(ep.samples, x - x[:50].mean())


def test_zero_epoch_is_invalid():
    assert not detect_p300(Epoch("o", np.zeros(201), 0)).valid


def test_half_cosine_is_detected():
    d = detect_p300(half_cosine_epoch())
    assert d.valid
    assert 348 <= d.peak_latency <= 352
    assert d.peak_amplitude == pytest.approx(5 * np.cos(np.pi * 2 / 200))


def test_window_excludes_out_of_window_peaks():
    x = np.zeros(201)
    x[50 + round(250 * 0.25)] = 5.0   # 250 ms, outside
    x[50 + round(250 * 0.40)] = 1.0   # 400 ms, inside but small
    d = detect_p300(Epoch("o", x, 0))
    assert not d.valid
    assert d.peak_latency == 400.0


def test_equal_samples_resolve_to_earlier_latency():
    assert detect_p300(half_cosine_epoch()).peak_latency == 348.0


def test_window_edges_are_inclusive():
    x = np.zeros(201)
    x[50 + 125] = 3.0  # exactly 500 ms
    assert detect_p300(Epoch("o", x, 0)).peak_latency == 500.0


def test_relative_threshold():
    rng = np.random.default_rng(0)
    base = rng.normal(size=201)
    ep = baseline_correct(Epoch("o", base + half_cosine_epoch(8.0).samples, 0))
    d = detect_p300(ep, mode="relative", k=2.0)
    assert d.threshold == pytest.approx(2 * np.std(ep.samples[:50]))
    assert d.valid
    with pytest.raises(ValueError):
        detect_p300(ep, mode="weird")


def test_winner_is_largest_valid():
    ds = [P300Detection("o", 350, 4.0, True, 2.0, 10), P300Detection("q", 350, 6.0, True, 2.0, 20),
          P300Detection("r", 350, 9.0, False, 10.0, 30)]
    assert select_p300_winner(ds) == "q"


def test_no_valid_detection():
    ds = [P300Detection("o", 350, 1.0, False, 2.0, 10)]
    assert select_p300_winner(ds) is None
    assert select_p300_winner([]) is None


def test_tie_goes_to_earliest_marker():
    ds = [P300Detection("r", 350, 5.0, True, 2.0, 900), P300Detection("p", 350, 5.0, True, 2.0, 100)]
    assert select_p300_winner(ds) == "p"


def test_duplicate_marker_is_protocol_error():
    ds = [P300Detection("o", 350, 5.0, True, 2.0, 1), P300Detection("o", 350, 3.0, True, 2.0, 2)]
    with pytest.raises(ProtocolError):
        select_p300_winner(ds)


def test_p300_signal_modes():
    data = np.zeros((2, 6))
    data[:, 0:3] = [3.0, 6.0, 9.0]
    np.testing.assert_array_equal(p300_signal(data, "pz"), [9.0, 9.0])
    np.testing.assert_array_equal(p300_signal(data, "midline"), [6.0, 6.0])


def test_average_epochs():
    a = average_epochs([Epoch("o", np.ones(201), 0), Epoch("o", 3 * np.ones(201), 1)])
    np.testing.assert_array_equal(a.samples, 2.0)
    with pytest.raises(ValueError):
        average_epochs([])


def test_attended_marker_wins_in_simulation():
    sim = simulate(100, SynthConfig(attended=(2,) * 100, seed=0))
    decisions = decode(sim.recording, sim.markers)
    hits = sum(d.p300_winner == "q" for d in decisions)
    assert hits >= 95


# -- properties ---------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(-10**9, 10**9), st.integers(60, 840), st.integers(-1999, 1999))
def test_translation_equivariance(delta, idx, jitter):
    x = np.random.default_rng(idx).normal(size=TS.size)
    m = MarkerEvent("p", int(TS[idx]) + jitter)
    a = extract_epoch(TS, x, m)
    b = extract_epoch(TS + delta, x, MarkerEvent("p", m.timestamp + delta))
    np.testing.assert_array_equal(a.samples, b.samples)
    assert a.offset_us == b.offset_us


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_validity_is_monotone_in_threshold(seed, t1, t2):
    lo, hi = sorted((t1, t2))
    ep = Epoch("o", np.random.default_rng(seed).normal(0, 3, size=201), 0)
    if detect_p300(ep, threshold=hi).valid:
        assert detect_p300(ep, threshold=lo).valid


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 100.0))
def test_winner_invariant_under_common_rescaling(seed, c):
    rng = np.random.default_rng(seed)
    epochs = [Epoch(code, rng.normal(0, 3, size=201), i) for i, code in enumerate("opqr")]
    w1 = select_p300_winner([detect_p300(e, threshold=2.0) for e in epochs])
    scaled = [Epoch(e.marker_code, c * e.samples, e.marker_timestamp) for e in epochs]
    w2 = select_p300_winner([detect_p300(e, threshold=2.0 * c) for e in scaled])
    assert w1 == w2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_each_marker_yields_one_epoch_and_windows_do_not_overlap(seed, n):
    sim = simulate(n, SynthConfig(seed=seed, noise_sigma=0.0))
    ts = sim.recording.timestamps
    x = sim.recording.data[:, 2]
    epochs = [extract_epoch(ts, x, m) for m in sim.markers]
    assert len(epochs) == 4 * n
    onsets = [m.timestamp for m in sim.markers]
    # [290, 500] ms windows of consecutive markers are disjoint
    assert all(b - a > 210_000 for a, b in zip(onsets, onsets[1:]))
