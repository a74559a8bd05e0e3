"""Bearing wear-level diagnosis from raw vibration data.

Pipeline: statistical features and their sliding entropy label snapshots
with K-means wear levels, snapshots become grayscale images, and a small
numpy CNN learns to classify the wear level.
"""

from .errors import DataError, DivergenceError, WearnetError
from .features import FeatureSeries, TsfKind, compute_tsf, shannon_entropy, tsf_series
from .imaging import (ImageSet, ImagingConfig, balance_classes, image_count, imagify_run,
                      load_dataset, save_dataset, signal_to_image)
from .ingest import (DegradationProfile, SignalSeries, VibrationSnapshot, load_run,
                     parse_filename_timestamp, parse_snapshot_file, synth_run)
from .labeling import WearLabeling, kmeans_1d, label_run
from .pipeline import LabeledRun, build_dataset, label_series, synthetic_dataset

__version__ = "0.1.0"
