"""End-to-end helpers: recordings -> wear labels -> balanced image dataset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureSeries, TsfKind
from .imaging import ImageSet, ImagingConfig, balance_classes, imagify_run
from .labeling import WearLabeling, label_run


@dataclass(frozen=True)
class LabeledRun:
    series: object
    features: FeatureSeries
    labeling: WearLabeling


def label_series(series, tsf=TsfKind.RMS, window_len: int = 16, K: int = 7, seed: int = 0,
                 two_d: bool = False) -> LabeledRun:
    """Feature -> sliding entropy -> K-means wear levels for every snapshot."""
    fs = FeatureSeries.from_series(series, tsf, window_len)
    aligned = fs.values[window_len - 1:] if two_d else None
    labeling = label_run(fs.entropy, K, seed, window_len=window_len, features=aligned)
    return LabeledRun(series, fs, labeling)


def build_dataset(labeled: LabeledRun, cfg: ImagingConfig, balance: bool = True) -> ImageSet:
    images = imagify_run(labeled.series, labeled.labeling, cfg)
    return balance_classes(images, cfg.balance_seed) if balance else images


def synthetic_dataset(profile, seed: int, imaging: ImagingConfig, window_len: int = 16,
                      K: int = 7) -> tuple[LabeledRun, ImageSet]:
    from .ingest import synth_run

    labeled = label_series(synth_run(profile, seed), TsfKind.RMS, window_len, K, seed)
    return labeled, build_dataset(labeled, imaging)
