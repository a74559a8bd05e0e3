"""
Result tables over fully connected widths
=========================================

Repeated runs for several FC widths, summarized as max/min/mean/std per
metric.  Tiny data and one epoch keep it quick; the numbers are only
meant to show the layout.
"""

import numpy as np

from wearnet import ImageSet
from wearnet.cnn import TrainConfig, build_preset
from wearnet.harness import fc_sweep, render_csv, render_text

rng = np.random.default_rng(0)
n = 7 * 8
data = ImageSet(rng.integers(0, 256, size=(n, 32, 32)), np.repeat(np.arange(7), 8),
                np.array([f"s{i}" for i in range(n)], dtype=object), np.zeros(n, int), 7)

builder = lambda i, j: build_preset("alexnet-mod", i, j, 7, M=32, width_div=16)
bundles = fc_sweep([512, 2560], [0, 256], data, R=3, cfg=TrainConfig(epochs=1, batch_size=32), builder=builder)

print(render_text(bundles))
print()
print(render_csv(bundles))
