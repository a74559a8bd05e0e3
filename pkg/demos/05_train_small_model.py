"""
Training a reduced CNN on synthetic wear images
===============================================

The full pipeline at desk scale: synthetic run, entropy labels, balanced
32x32 images, and a narrowed AlexNet-style network.  Takes about a minute.
"""

from wearnet import DegradationProfile, ImagingConfig, synthetic_dataset
from wearnet.cnn import TrainConfig, build_preset
from wearnet.harness import split, train_and_evaluate

profile = DegradationProfile(noise_level=0.007, snapshots=70, samples_per_snapshot=8192,
                             growth_rate=3.2, carrier_cycles=128, levels=7)
labeled, dataset = synthetic_dataset(profile, seed=0, imaging=ImagingConfig(32, 512, 0), window_len=1)
print("images per class:", dataset.class_counts())

train, test = split(dataset, 0.7, seed=0)

# M=32 is too small for valid padding, so the preset switches to same padding
spec = build_preset("alexnet-mod", 640, 64, n_classes=7, M=32, width_div=4)
print(spec.describe())

model, metrics, losses = train_and_evaluate(spec, train, test, TrainConfig(epochs=6, batch_size=32,
                                                                          schedule="cosine"), seed=0)
print(f"final loss {losses[-1]:.4f}")
print({k: round(v, 4) for k, v in metrics.as_dict().items()})
print(metrics.confusion)
