"""Time-domain statistical features and their sliding-window entropy.

Standard deviations use the population convention (divide by ``n``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStatisticsError, DomainError, ShapeError


class TsfKind(str, enum.Enum):
    RMS = "RMS"
    KURTOSIS = "Kurtosis"
    SKEWNESS = "Skewness"
    PEAK_TO_PEAK = "PeakToPeak"
    CREST_FACTOR = "CrestFactor"
    SHAPE_FACTOR = "ShapeFactor"
    IMPULSE_FACTOR = "ImpulseFactor"
    MARGIN_FACTOR = "MarginFactor"

    @classmethod
    def parse(cls, name) -> "TsfKind":
        if isinstance(name, cls):
            return name
        key = str(name).replace("-", "").replace("_", "").replace(" ", "").lower()
        for kind in cls:
            if kind.value.lower() == key or kind.name.replace("_", "").lower() == key:
                return kind
        raise ValueError(f"unknown feature {name!r}; choose from {[k.value for k in cls]}")


def _rms(x):
    return np.sqrt(np.mean(x * x))


def _standardized_moment(x, order):
    sigma = x.std()
    if not sigma > 0:
        raise DegenerateStatisticsError("zero-variance window")
    return np.mean(((x - x.mean()) / sigma) ** order)


def _ratio(num, den, what):
    if not den > 0:
        raise DegenerateStatisticsError(f"{what}: zero denominator")
    return num / den


def compute_tsf(window, kind) -> float:
    """Value of one statistical feature over ``window``."""
    x = np.asarray(window, dtype=np.float64).ravel()
    if x.size == 0:
        raise ShapeError("empty window")
    kind = TsfKind.parse(kind)

    if kind is TsfKind.RMS:
        return float(_rms(x))
    if kind is TsfKind.KURTOSIS:
        return float(_standardized_moment(x, 4))
    if kind is TsfKind.SKEWNESS:
        return float(_standardized_moment(x, 3))
    if kind is TsfKind.PEAK_TO_PEAK:
        return float(x.max() - x.min())

    peak = np.abs(x).max()
    mean_abs = np.abs(x).mean()
    if kind is TsfKind.CREST_FACTOR:
        return float(_ratio(peak, _rms(x), kind.value))
    if kind is TsfKind.SHAPE_FACTOR:
        return float(_ratio(_rms(x), mean_abs, kind.value))
    if kind is TsfKind.IMPULSE_FACTOR:
        return float(_ratio(peak, mean_abs, kind.value))
    # margin factor
    return float(_ratio(peak, np.mean(np.sqrt(np.abs(x))) ** 2, kind.value))


def tsf_series(series, kind) -> np.ndarray:
    """One feature value per snapshot of ``series`` (a SignalSeries or 2-D array)."""
    data = series if isinstance(series, np.ndarray) else getattr(series, "data", series)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ShapeError("series must hold at least one snapshot")
    out = np.empty(data.shape[0])
    for k, row in enumerate(data):
        try:
            out[k] = compute_tsf(row, kind)
        except DegenerateStatisticsError as exc:
            raise DegenerateStatisticsError(f"snapshot {k}: {exc}") from None
    return out


def shannon_entropy(tsf_values, window_len: int) -> np.ndarray:
    """Sliding-window mean of ``-v * log2(v)`` with hop 1.

    ``out[j]`` covers ``tsf_values[j : j + window_len]``; zeros contribute 0.
    """
    v = np.asarray(tsf_values, dtype=np.float64).ravel()
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if window_len > v.size:
        raise ShapeError(f"window_len {window_len} exceeds series length {v.size}")
    if np.any(v < 0):
        raise DomainError("entropy is undefined for negative feature values")
    terms = np.zeros_like(v)
    pos = v > 0
    terms[pos] = -v[pos] * np.log2(v[pos])
    windows = np.lib.stride_tricks.sliding_window_view(terms, window_len)
    return windows.sum(axis=1) / window_len


@dataclass(frozen=True)
class FeatureSeries:
    kind: TsfKind
    values: np.ndarray
    window_len: int
    entropy: np.ndarray

    @classmethod
    def from_series(cls, series, kind, window_len: int = 16) -> "FeatureSeries":
        kind = TsfKind.parse(kind)
        values = tsf_series(series, kind)
        if window_len > values.size:
            entropy = np.empty(0)
        else:
            entropy = shannon_entropy(values, window_len)
        return cls(kind, values, window_len, entropy)
