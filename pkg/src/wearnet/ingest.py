"""Reading IMS-style vibration recordings and generating synthetic runs.

An IMS snapshot file is ASCII text with one row per sampling instant and one
tab-separated column per accelerometer channel.  Files are named after their
acquisition time, ``YYYY.MM.DD.HH.MM.SS``.
"""

from __future__ import annotations

import io
import logging
import os
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ChannelRangeError, FormatError, ParseError, StructureError

log = logging.getLogger(__name__)

_TIMESTAMP_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)\.(\d+)\.(\d+)\.(\d+)$")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class VibrationSnapshot:
    """One recorded file: acquisition time plus a (channels, samples) array."""

    timestamp: datetime
    channels: np.ndarray

    def __post_init__(self):
        ch = _frozen(self.channels)
        if ch.ndim != 2:
            raise StructureError("channels must be a 2-D (channels, samples) array")
        if ch.shape[1] == 0:
            raise StructureError("snapshot has no samples")
        object.__setattr__(self, "channels", ch)

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def samples_per_channel(self) -> int:
        return self.channels.shape[1]


@dataclass(frozen=True)
class SignalSeries:
    """Time-ordered snapshots of a single channel.

    ``data[k]`` holds the samples of snapshot ``k``; ``names[k]`` identifies
    the source file (or a synthetic id) for provenance.
    """

    timestamps: tuple[datetime, ...]
    data: np.ndarray
    channel_index: int = 0
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
            raise StructureError("series data must be a non-empty 2-D array")
        if len(self.timestamps) != data.shape[0]:
            raise StructureError("one timestamp per snapshot is required")
        ts = tuple(self.timestamps)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise StructureError("timestamps must be strictly increasing")
        names = tuple(self.names) or tuple(format_timestamp(t) for t in ts)
        if len(names) != len(ts):
            raise StructureError("one name per snapshot is required")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "names", names)

    def __len__(self):
        return self.data.shape[0]

    @property
    def samples_per_channel(self) -> int:
        return self.data.shape[1]

    @property
    def snapshots(self) -> list[VibrationSnapshot]:
        return [VibrationSnapshot(t, row[None, :]) for t, row in zip(self.timestamps, self.data)]


def parse_snapshot_file(raw_bytes: bytes, expected_channels: int) -> VibrationSnapshot:
    """Parse the text of one snapshot file.

    The returned snapshot carries ``datetime.min`` as its timestamp; the real
    acquisition time lives in the filename (see :func:`parse_filename_timestamp`).
    """
    if expected_channels < 1:
        raise ValueError("expected_channels must be positive")
    try:
        text = raw_bytes.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"non-ASCII content at byte {exc.start}") from None

    if not text.strip():
        raise StructureError("empty snapshot file")

    try:
        table = np.loadtxt(io.StringIO(text), dtype=np.float64, ndmin=2)
    except ValueError:
        # slow path only to locate the offending line
        table = _parse_lines(text, expected_channels)
    if table.shape[1] != expected_channels:
        raise StructureError(f"expected {expected_channels} columns, found {table.shape[1]}")
    return VibrationSnapshot(datetime.min, table.T)


def _parse_lines(text: str, expected_channels: int) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != expected_channels:
            raise StructureError(
                f"line {lineno}: expected {expected_channels} columns, found {len(fields)}"
            )
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise ParseError(f"malformed numeric field in {line!r}", line=lineno) from None
    return np.array(rows, dtype=np.float64)


def serialize_snapshot(snapshot: VibrationSnapshot) -> bytes:
    """Inverse of :func:`parse_snapshot_file` (shortest round-trip float repr)."""
    lines = ["\t".join(repr(float(v)) for v in row) for row in snapshot.channels.T]
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_filename_timestamp(name: str) -> datetime:
    m = _TIMESTAMP_RE.match(os.path.basename(name))
    if m is None:
        raise FormatError(f"{name!r} is not a YYYY.MM.DD.HH.MM.SS snapshot name")
    try:
        return datetime(*(int(g) for g in m.groups()))
    except ValueError as exc:
        raise FormatError(f"{name!r}: {exc}") from None


def format_timestamp(t: datetime) -> str:
    return t.strftime("%Y.%m.%d.%H.%M.%S")


def list_snapshot_files(directory) -> list[tuple[datetime, Path]]:
    """Timestamp-sorted snapshot files of ``directory`` (other names are skipped)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise StructureError(f"{directory} is not a directory")
    found = []
    for p in directory.iterdir():
        if not p.is_file():
            continue
        try:
            found.append((parse_filename_timestamp(p.name), p))
        except FormatError:
            log.debug("skipping %s", p)
    found.sort()
    return found


def load_run(directory, channel_index: int, expected_channels: int | None = None) -> SignalSeries:
    """Load every snapshot file in ``directory``, keeping one channel.

    ``expected_channels`` defaults to the column count of the earliest file.
    """
    files = list_snapshot_files(directory)
    if not files:
        raise StructureError(f"{directory} holds no snapshot files")
    if channel_index < 0:
        raise ChannelRangeError(f"channel {channel_index} out of range")

    timestamps, names, rows = [], [], []
    for ts, path in files:
        raw = path.read_bytes()
        try:
            if expected_channels is None:
                first = next(line for line in raw.decode("ascii", "replace").splitlines() if line.strip())
                expected_channels = len(first.split())
            snap = parse_snapshot_file(raw, expected_channels)
        except (ParseError, StructureError, StopIteration) as exc:
            raise ParseError(str(exc), filename=path.name) from None
        if channel_index >= snap.n_channels:
            raise ChannelRangeError(
                f"channel {channel_index} out of range for {snap.n_channels}-channel data"
            )
        if rows and snap.samples_per_channel != rows[0].shape[0]:
            raise StructureError(
                f"{path.name}: {snap.samples_per_channel} samples, expected {rows[0].shape[0]}"
            )
        timestamps.append(ts)
        names.append(path.name)
        rows.append(snap.channels[channel_index])
    if len(set(timestamps)) != len(timestamps):
        raise StructureError(f"{directory} holds duplicate timestamps")
    return SignalSeries(tuple(timestamps), np.stack(rows), channel_index, tuple(names))


def write_run(series_or_snapshots, directory, timestamps: Sequence[datetime] | None = None) -> list[Path]:
    """Write snapshots as IMS-format files named by timestamp."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if isinstance(series_or_snapshots, SignalSeries):
        snaps = series_or_snapshots.snapshots
        timestamps = series_or_snapshots.timestamps
    else:
        snaps = list(series_or_snapshots)
        timestamps = timestamps or [s.timestamp for s in snaps]
    paths = []
    for t, s in zip(timestamps, snaps):
        p = directory / format_timestamp(t)
        p.write_bytes(serialize_snapshot(s))
        paths.append(p)
    return paths


@dataclass(frozen=True)
class DegradationProfile:
    """Parameters of a synthetic run-to-failure recording.

    Each snapshot is a shaft tone of ``base_amplitude`` plus broadband noise
    whose standard deviation is ``noise_level * exp(growth_rate * u_k)``, where
    ``u_k = k / (n - 1)`` rises smoothly from 0 to 1.  With ``levels`` set,
    ``u_k`` is quantized into that many equal-length plateaus instead, which
    emulates discrete wear stages.  ``carrier_cycles`` is the number of tone
    periods per snapshot.
    """

    base_amplitude: float = 0.05
    noise_level: float = 0.02
    growth_rate: float = 2.0
    snapshots: int = 100
    samples_per_snapshot: int = 20480
    carrier_cycles: int = 640
    snapshot_interval_s: int = 600
    levels: int | None = None

    def __post_init__(self):
        if self.base_amplitude <= 0 or self.noise_level <= 0:
            raise ValueError("amplitude and noise level must be positive")
        if self.growth_rate < 0:
            raise ValueError("growth_rate must be non-negative")
        if self.snapshots < 1 or self.samples_per_snapshot < 1:
            raise ValueError("snapshots and samples_per_snapshot must be positive")
        if not 0 < 2 * self.carrier_cycles < self.samples_per_snapshot:
            raise ValueError("carrier_cycles must lie in (0, samples_per_snapshot / 2)")
        if self.levels is not None and not 1 <= self.levels <= self.snapshots:
            raise ValueError("levels must lie in 1..snapshots")

    def envelope(self) -> np.ndarray:
        k = np.arange(self.snapshots, dtype=np.float64)
        if self.levels is None:
            u = k / max(self.snapshots - 1, 1)
        else:
            u = np.floor(k * self.levels / self.snapshots) / max(self.levels - 1, 1)
        return np.exp(self.growth_rate * u)


def synth_run(profile: DegradationProfile, seed: int) -> SignalSeries:
    """Synthetic single-channel run with a monotone wear envelope.

    The noise of every snapshot is standardized and made orthogonal to the
    tone, so the population variance of snapshot ``k`` is exactly
    ``base_amplitude**2 / 2 + (noise_level * envelope[k])**2``.
    """
    rng = np.random.default_rng(seed)
    n = profile.samples_per_snapshot
    t = np.arange(n) / n
    env = profile.envelope()
    rows = np.empty((profile.snapshots, n))
    for k in range(profile.snapshots):
        phase = rng.uniform(0, 2 * np.pi)
        tone = np.sin(2 * np.pi * profile.carrier_cycles * t + phase)
        noise = rng.standard_normal(n)
        noise -= noise.mean()
        noise -= (noise @ tone) / (tone @ tone) * tone
        noise /= noise.std()
        rows[k] = profile.base_amplitude * tone + profile.noise_level * env[k] * noise
    start = datetime(2004, 2, 12, 10, 32, 39)
    stamps = tuple(start + timedelta(seconds=k * profile.snapshot_interval_s) for k in range(profile.snapshots))
    return SignalSeries(stamps, rows, 0)
