"""
Unsupervised wear levels
========================

K-means on the entropy series splits the run into seven ordered wear
levels; level 0 has the lowest centroid.
"""

import numpy as np

from wearnet import DegradationProfile, label_series, synth_run

run = synth_run(DegradationProfile(snapshots=70, samples_per_snapshot=4096, carrier_cycles=128, levels=7), seed=0)

# window 1 keeps one entropy value per snapshot
labeled = label_series(run, "RMS", window_len=1, K=7, seed=0)
lab = labeled.labeling

for level, (name, count) in enumerate(zip(lab.level_names, lab.counts())):
    print(f"level {level} {name:>9}: {count:3d} snapshots, centroid {lab.centroids[level]:.5f}")

# the degradation is monotone, so levels never go down over time
print("non-decreasing:", bool(np.all(np.diff(lab.assignment) >= 0)))
