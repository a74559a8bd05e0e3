"""Signal-to-image encoding and the on-disk image dataset.

A sub-sample of ``M*M`` consecutive points fills an ``M x M`` image row by
row; each pixel is the point min-max normalized to 0..255 within that
sub-sample.  Sub-sample ``i`` starts at offset ``i * step``.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import BalanceError, DataError, FormatError, ShapeError

MANIFEST_FIELDS = ("path", "label", "snapshot", "sub_index")


@dataclass(frozen=True)
class ImagingConfig:
    M: int = 64
    step: int = 64
    balance_seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.step < 1:
            raise ValueError("M and step must be positive")

    def validate(self, samples_per_channel: int):
        if self.M * self.M > samples_per_channel:
            raise ShapeError(
                f"M*M = {self.M * self.M} exceeds {samples_per_channel} samples per snapshot"
            )


def image_count(N: int, M: int, s: int) -> int:
    """Number of complete sub-samples: ``floor((N - M*M) / s) + 1``, or 0."""
    if N < M * M:
        return 0
    return (N - M * M) // s + 1


def _round_half_away(v):
    return np.where(v >= 0, np.floor(v + 0.5), -np.floor(-v + 0.5))


def windows_to_images(windows, M: int) -> np.ndarray:
    """Encode a batch of ``(n, M*M)`` windows into ``(n, M, M)`` uint8 images."""
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != M * M:
        raise ShapeError(f"windows must have shape (n, {M * M}), got {w.shape}")
    lo = w.min(axis=1, keepdims=True)
    span = w.max(axis=1, keepdims=True) - lo
    flat = span[:, 0] == 0
    span[flat] = 1.0
    v = (w - lo) / span * 255.0
    v[flat] = 0.0
    return _round_half_away(v).astype(np.uint8).reshape(-1, M, M)


def signal_to_image(window, M: int) -> np.ndarray:
    w = np.asarray(window, dtype=np.float64).ravel()
    if w.size != M * M:
        raise ShapeError(f"window of length {w.size} cannot fill a {M}x{M} image")
    return windows_to_images(w[None, :], M)[0]


def snapshot_windows(samples, M: int, step: int) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = image_count(x.size, M, step)
    if n == 0:
        return np.empty((0, M * M))
    return np.lib.stride_tricks.sliding_window_view(x, M * M)[: (n - 1) * step + 1 : step]


@dataclass(frozen=True)
class SignalImage:
    pixels: np.ndarray
    label: int
    snapshot: str
    sub_index: int

    @property
    def M(self) -> int:
        return self.pixels.shape[0]


@dataclass
class ImageSet:
    """Labeled images with provenance, stored column-wise."""

    pixels: np.ndarray
    labels: np.ndarray
    snapshots: np.ndarray
    sub_index: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.intp)
        self.snapshots = np.asarray(self.snapshots, dtype=object)
        self.sub_index = np.asarray(self.sub_index, dtype=np.intp)
        n = self.pixels.shape[0]
        if not (self.labels.shape == self.snapshots.shape == self.sub_index.shape == (n,)):
            raise ShapeError("image set columns have inconsistent lengths")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DataError("label out of range")

    def __len__(self):
        return self.pixels.shape[0]

    def __getitem__(self, i) -> SignalImage:
        return SignalImage(self.pixels[i], int(self.labels[i]), str(self.snapshots[i]), int(self.sub_index[i]))

    def subset(self, idx) -> "ImageSet":
        idx = np.asarray(idx, dtype=np.intp)
        return ImageSet(self.pixels[idx], self.labels[idx], self.snapshots[idx],
                        self.sub_index[idx], self.n_classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def keys(self) -> list[tuple[str, int]]:
        return list(zip(self.snapshots.tolist(), self.sub_index.tolist()))

    @classmethod
    def concat(cls, sets) -> "ImageSet":
        sets = list(sets)
        return cls(np.concatenate([s.pixels for s in sets]),
                   np.concatenate([s.labels for s in sets]),
                   np.concatenate([s.snapshots for s in sets]),
                   np.concatenate([s.sub_index for s in sets]),
                   max(s.n_classes for s in sets))


def iter_snapshot_images(series, labeling, cfg: ImagingConfig) -> Iterator[ImageSet]:
    """Yield the images of each snapshot in order, one ImageSet per snapshot."""
    cfg.validate(series.samples_per_channel)
    assignment = np.asarray(labeling.assignment)
    if assignment.size != len(series):
        raise ShapeError(f"labeling covers {assignment.size} snapshots, series has {len(series)}")
    for k, (name, row) in enumerate(zip(series.names, series.data)):
        imgs = windows_to_images(snapshot_windows(row, cfg.M, cfg.step), cfg.M)
        n = imgs.shape[0]
        yield ImageSet(imgs, np.full(n, assignment[k]), np.full(n, name, dtype=object),
                       np.arange(n), labeling.K)


def imagify_run(series, labeling, cfg: ImagingConfig) -> ImageSet:
    return ImageSet.concat(iter_snapshot_images(series, labeling, cfg))


def balanced_indices(labels, n_classes: int, seed: int) -> np.ndarray:
    """Sorted indices that undersample every class to the smallest class size."""
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=n_classes)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise BalanceError(f"class {int(empty[0])} has no images")
    target = int(counts.min())
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(n_classes):
        members = np.flatnonzero(labels == c)
        if members.size == target:
            keep.append(members)
        else:
            keep.append(np.sort(rng.choice(members, size=target, replace=False)))
    return np.sort(np.concatenate(keep))


def balance_classes(images: ImageSet, seed: int) -> ImageSet:
    """Undersample every class, without replacement, to the smallest class size.

    The surviving images keep their original relative order.
    """
    return images.subset(balanced_indices(images.labels, images.n_classes, seed))


# -- PGM (binary, 8-bit) -----------------------------------------------------

def encode_pgm(pixels) -> bytes:
    p = np.asarray(pixels)
    if p.ndim != 2:
        raise ShapeError("PGM images are 2-D")
    if p.dtype != np.uint8:
        if p.min() < 0 or p.max() > 255:
            raise ValueError("pixel values must lie in 0..255")
        p = p.astype(np.uint8)
    h, w = p.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(p).tobytes()


_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def decode_pgm(data: bytes) -> np.ndarray:
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError("truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FormatError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("non-integer PGM header field") from None
    if maxval > 255 or maxval < 1:
        raise FormatError(f"unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    body = data[pos : pos + w * h]
    if len(body) != w * h:
        raise FormatError("truncated PGM pixel data")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, pixels):
    Path(path).write_bytes(encode_pgm(pixels))


def read_pgm(path) -> np.ndarray:
    return decode_pgm(Path(path).read_bytes())


# -- dataset on disk ---------------------------------------------------------

def image_filename(snapshot: str, sub_index: int) -> str:
    return f"{snapshot}_{sub_index}.pgm"


class DatasetWriter:
    """Writes PGM files plus ``manifest.csv`` into ``out_dir``."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.out_dir / "manifest.csv", "w", newline="")
        self._csv = csv.writer(self._fh)
        self._csv.writerow(MANIFEST_FIELDS)
        self.count = 0

    def add(self, images: ImageSet):
        for i in range(len(images)):
            name = image_filename(images.snapshots[i], int(images.sub_index[i]))
            write_pgm(self.out_dir / name, images.pixels[i])
            self._csv.writerow((name, int(images.labels[i]), images.snapshots[i], int(images.sub_index[i])))
            self.count += 1

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def save_dataset(images: ImageSet, out_dir) -> Path:
    with DatasetWriter(out_dir) as w:
        w.add(images)
    return Path(out_dir) / "manifest.csv"


def load_dataset(manifest, n_classes: int | None = None) -> ImageSet:
    manifest = Path(manifest)
    root = manifest.parent
    pixels, labels, snaps, subs = [], [], [], []
    with open(manifest, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(MANIFEST_FIELDS) <= set(reader.fieldnames):
            raise FormatError(f"{manifest}: expected columns {MANIFEST_FIELDS}")
        for row in reader:
            pixels.append(read_pgm(root / row["path"]))
            labels.append(int(row["label"]))
            snaps.append(row["snapshot"])
            subs.append(int(row["sub_index"]))
    if not pixels:
        raise DataError(f"{manifest} lists no images")
    if n_classes is None:
        n_classes = max(labels) + 1
    return ImageSet(np.stack(pixels), np.array(labels), np.array(snaps, dtype=object),
                    np.array(subs), n_classes)
