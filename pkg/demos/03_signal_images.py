"""
From vibration windows to grayscale images
==========================================

Each M*M window becomes an M x M image, min-max scaled to 0..255 and filled
row by row.  Windows start every ``step`` samples, so they may overlap.
"""

import tempfile
from pathlib import Path

import numpy as np

from wearnet import (DegradationProfile, ImagingConfig, balance_classes, image_count, imagify_run,
                     label_series, load_dataset, save_dataset, signal_to_image, synth_run)

# the smallest possible example
print(signal_to_image([0, 1, 2, 3], 2))

# a 20480-sample snapshot yields 257 non-overlapping 64x64 images
print("images per snapshot:", image_count(20480, 64, 64))

run = synth_run(DegradationProfile(snapshots=28, samples_per_snapshot=2048, carrier_cycles=64, levels=7), seed=1)
labeling = label_series(run, "RMS", window_len=1, K=7).labeling
images = imagify_run(run, labeling, ImagingConfig(M=16, step=128))
print("per class before balancing:", images.class_counts())

balanced = balance_classes(images, seed=0)
print("per class after balancing: ", balanced.class_counts())

# PGM files plus manifest.csv, read back bit-exactly
with tempfile.TemporaryDirectory() as tmp:
    manifest = save_dataset(balanced, Path(tmp) / "images")
    back = load_dataset(manifest, n_classes=7)
    print("round trip exact:", np.array_equal(back.pixels, balanced.pixels))
