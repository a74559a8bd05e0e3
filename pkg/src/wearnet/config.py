"""Structured run configuration, read from a YAML (or JSON) file.

Every section is optional; missing keys take the defaults below.  All
randomness is driven by the seeds listed here.

.. code-block:: yaml

    data:
      directory: data/2nd_test
      channel: 0
      # synthetic: {snapshots: 70, growth_rate: 3.2, levels: 7, seed: 0}
    features: {tsf: RMS, entropy_window: 16}
    labeling: {K: 7, seed: 0, two_d: false}
    imaging: {M: 64, step: 64, balance: true, seed: 0}
    model: {preset: alexnet-mod, fc_i: 2560, fc_j: 256}
    train: {optimizer: adam, lr: 0.001, batch_size: 64, epochs: 30, seed: 0}
    eval: {runs: 10, train_fraction: 0.7, split_by_snapshot: false}
    sweep: {widths_i: [512, 1024, 1536, 2048, 2560, 3072, 3584], widths_j: [0]}
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .cnn.train import TrainConfig
from .imaging import ImagingConfig
from .ingest import DegradationProfile


class ConfigError(ValueError):
    pass


@dataclass
class DataSection:
    directory: str | None = None
    channel: int = 0
    expected_channels: int | None = None
    synthetic: dict | None = None


@dataclass
class FeaturesSection:
    tsf: str = "RMS"
    entropy_window: int = 16


@dataclass
class LabelingSection:
    K: int = 7
    seed: int = 0
    two_d: bool = False


@dataclass
class ImagingSection:
    M: int = 64
    step: int = 64
    balance: bool = True
    seed: int = 0


@dataclass
class ModelSection:
    preset: str = "alexnet-mod"
    fc_i: int = 2560
    fc_j: int = 256
    width_div: int = 1
    same_padding: bool | None = None


@dataclass
class TrainSection:
    optimizer: str = "adam"
    lr: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 30
    schedule: str = "constant"
    seed: int = 0


@dataclass
class EvalSection:
    runs: int = 10
    train_fraction: float = 0.7
    split_by_snapshot: bool = False


@dataclass
class SweepSection:
    widths_i: list = field(default_factory=lambda: [512, 1024, 1536, 2048, 2560, 3072, 3584])
    widths_j: list = field(default_factory=lambda: [0])


@dataclass
class Config:
    data: DataSection = field(default_factory=DataSection)
    features: FeaturesSection = field(default_factory=FeaturesSection)
    labeling: LabelingSection = field(default_factory=LabelingSection)
    imaging: ImagingSection = field(default_factory=ImagingSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    eval: EvalSection = field(default_factory=EvalSection)
    sweep: SweepSection = field(default_factory=SweepSection)

    @classmethod
    def from_dict(cls, raw: dict | None) -> "Config":
        raw = raw or {}
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a mapping of sections")
        sections = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(raw) - set(sections)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        built = {}
        for name, f in sections.items():
            section_cls = f.default_factory().__class__
            values = raw.get(name) or {}
            allowed = {sf.name for sf in dataclasses.fields(section_cls)}
            bad = set(values) - allowed
            if bad:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
            built[name] = section_cls(**values)
        return cls(**built)

    @classmethod
    def load(cls, path) -> "Config":
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(t.optimizer, t.lr, t.momentum, t.batch_size, t.epochs, t.schedule)

    def imaging_config(self) -> ImagingConfig:
        return ImagingConfig(self.imaging.M, self.imaging.step, self.imaging.seed)

    def synthetic_profile(self) -> tuple[DegradationProfile, int]:
        spec = dict(self.data.synthetic or {})
        seed = int(spec.pop("seed", 0))
        try:
            return DegradationProfile(**spec), seed
        except TypeError as exc:
            raise ConfigError(f"bad synthetic profile: {exc}") from None
