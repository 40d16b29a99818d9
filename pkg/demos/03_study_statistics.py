"""
Accuracy table and information transfer rate
=============================================

Recount of the bundled per-direction success flags of the 12-participant,
5-session study, and Wolpaw ITR at the resulting accuracy.
"""

from hybridbci.evaluation import (
    REPORTED_MEAN_ACCURACY,
    aggregate,
    itr_bits_per_selection,
    itr_bpm,
    load_table2,
    selection_time_for,
)

report = aggregate(load_table2())
print(report.text())
print(f"\nreported mean {REPORTED_MEAN_ACCURACY}% vs recount {report.overall.percent}%")

p = float(REPORTED_MEAN_ACCURACY) / 100
print(f"\nbits/selection at P={p}: {itr_bits_per_selection(p, 4):.4f}")
for t in (1.717, 2.0):
    print(f"  T = {t} s -> {itr_bpm(p, 4, t):.2f} bpm")
print(f"selection time implied by 42.08 bpm: {selection_time_for(42.08, p, 4):.4f} s")
