"""
Statistical features of a degrading bearing
===========================================

A synthetic run-to-failure recording stands in for real accelerometer data.
We compute the eight time-domain features per snapshot, then the sliding
entropy of RMS that the labeling step clusters on.
"""

import numpy as np

from wearnet import DegradationProfile, TsfKind, shannon_entropy, synth_run, tsf_series

# 60 snapshots of 4096 samples; noise grows exponentially towards failure
run = synth_run(DegradationProfile(snapshots=60, samples_per_snapshot=4096, carrier_cycles=128), seed=0)
print(f"{len(run)} snapshots, {run.samples_per_channel} samples each, first at {run.timestamps[0]}")

# one value per snapshot for every feature
for kind in TsfKind:
    v = tsf_series(run, kind)
    print(f"{kind.value:>14}: first {v[0]:.4f}  last {v[-1]:.4f}")

# RMS stays below 1/e here, so -v*log2(v) rises with it
rms = tsf_series(run, TsfKind.RMS)
h = shannon_entropy(rms, window_len=8)
print("entropy of RMS (window 8):", np.round(h[::10], 4))
