"""Splits, repeated training runs, metrics and result tables."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cnn.model import Model, ModelSpec, build_preset
from .cnn.train import TrainConfig, fit, predict
from .errors import DivergenceError, ShapeError, SplitError
from .imaging import ImageSet

log = logging.getLogger(__name__)

METRICS = ("accuracy", "precision", "recall", "f1", "mse")
STATS = ("max", "min", "mean", "std")


# -- splitting ---------------------------------------------------------------

def _split_count(n: int, train_fraction: float) -> int:
    return min(max(int(np.floor(train_fraction * n)), 1), n - 1)


def split(dataset: ImageSet, train_fraction: float = 0.7, seed: int = 0,
          by_snapshot: bool = False) -> tuple[ImageSet, ImageSet]:
    """Stratified train/test split.

    Each class is shuffled and cut independently at ``floor(fraction * n)``,
    clamped so both sides keep at least one item.  With ``by_snapshot`` the
    unit being split is the source snapshot rather than the image, so no
    snapshot contributes to both sides.
    """
    if not 0 < train_fraction < 1:
        raise SplitError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == c)
        if members.size == 0:
            continue
        if by_snapshot:
            groups = list(dict.fromkeys(dataset.snapshots[members].tolist()))
            if len(groups) < 2:
                raise SplitError(f"class {c} has fewer than 2 snapshots")
            perm = rng.permutation(len(groups))
            k = _split_count(len(groups), train_fraction)
            train_groups = {groups[i] for i in perm[:k]}
            in_train = np.array([s in train_groups for s in dataset.snapshots[members]])
            train_idx.append(members[in_train])
            test_idx.append(members[~in_train])
        else:
            if members.size < 2:
                raise SplitError(f"class {c} has fewer than 2 images")
            perm = rng.permutation(members)
            k = _split_count(members.size, train_fraction)
            train_idx.append(perm[:k])
            test_idx.append(perm[k:])
    if not train_idx:
        raise SplitError("dataset is empty")
    return dataset.subset(np.concatenate(train_idx)), dataset.subset(np.concatenate(test_idx))


# -- metrics -----------------------------------------------------------------

@dataclass
class RunMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    mse: float
    confusion: np.ndarray
    undefined: int = 0

    def as_dict(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}


def confusion_matrix(predictions, labels, K: int) -> np.ndarray:
    """``confusion[true, predicted]`` counts."""
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (labels, predictions), 1)
    return cm


def compute_metrics(predictions, labels, K: int) -> RunMetrics:
    """Accuracy, macro precision/recall/F1 and ordinal MSE.

    Macro averages run over the classes that occur in either ``labels`` or
    ``predictions``.  A per-class ratio with a zero denominator counts as 0
    and increments ``undefined``.
    """
    p = np.asarray(predictions, dtype=np.intp).ravel()
    y = np.asarray(labels, dtype=np.intp).ravel()
    if p.shape != y.shape:
        raise ShapeError(f"{p.size} predictions for {y.size} labels")
    if y.size == 0:
        raise ShapeError("no samples to score")
    if min(p.min(), y.min()) < 0 or max(p.max(), y.max()) >= K:
        raise ShapeError(f"class indices must lie in 0..{K - 1}")

    cm = confusion_matrix(p, y, K)
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    active = (support + predicted) > 0
    undefined = int(np.sum(active & (predicted == 0)) + np.sum(active & (support == 0)))

    with np.errstate(invalid="ignore", divide="ignore"):
        prec = np.where(predicted > 0, tp / predicted, 0.0)
        rec = np.where(support > 0, tp / support, 0.0)
        f1 = np.where(prec + rec > 0, 2 * prec * rec / (prec + rec), 0.0)

    if undefined:
        log.warning("%d per-class precision/recall values undefined, counted as 0", undefined)
    return RunMetrics(
        accuracy=float(np.trace(cm) / cm.sum()),
        precision=float(prec[active].mean()),
        recall=float(rec[active].mean()),
        f1=float(f1[active].mean()),
        mse=float(np.mean((p - y).astype(np.float64) ** 2)),
        confusion=cm,
        undefined=undefined,
    )


# -- repeated runs -----------------------------------------------------------

@dataclass
class ReportBundle:
    model: str
    runs: list = field(default_factory=list)

    @property
    def R(self) -> int:
        return len(self.runs)

    def values(self, metric: str) -> np.ndarray:
        return np.array([r[metric] if isinstance(r, dict) else getattr(r, metric) for r in self.runs])

    def stat(self, metric: str, which: str) -> float:
        v = self.values(metric)
        if which == "mean":
            # summation rounding can push the mean of equal values one ulp outside [min, max]
            return float(np.clip(v.mean(), v.min(), v.max()))
        return float({"max": v.max, "min": v.min, "std": v.std}[which]())

    def summary(self) -> dict:
        return {m: {s: self.stat(m, s) for s in STATS} for m in METRICS}

    def to_dict(self) -> dict:
        runs = [r if isinstance(r, dict) else r.as_dict() for r in self.runs]
        return {"model": self.model, "R": self.R, "runs": runs, "summary": self.summary()}

    @classmethod
    def from_dict(cls, d) -> "ReportBundle":
        return cls(d["model"], [dict(r) for r in d["runs"]])


def train_and_evaluate(spec: ModelSpec, train: ImageSet, test: ImageSet, cfg: TrainConfig,
                       seed: int) -> tuple[Model, RunMetrics, list[float]]:
    model = Model(spec, seed=seed)
    losses = fit(model, train.pixels, train.labels, cfg, seed)
    preds = predict(model, test.pixels)
    return model, compute_metrics(preds, test.labels, spec.n_classes), losses


def repeated_runs(spec: ModelSpec, dataset: ImageSet, R: int = 10, base_seed: int = 0,
                  cfg: TrainConfig | None = None, train_fraction: float = 0.7,
                  by_snapshot: bool = False) -> ReportBundle:
    """Train and score ``spec`` R times; run ``r`` seeds everything with ``base_seed + r``."""
    if R < 1:
        raise ValueError("R must be at least 1")
    cfg = cfg or TrainConfig()
    bundle = ReportBundle(spec.name)
    for r in range(R):
        seed = base_seed + r
        train, test = split(dataset, train_fraction, seed, by_snapshot)
        try:
            _, metrics, _ = train_and_evaluate(spec, train, test, cfg, seed)
        except DivergenceError as exc:
            raise DivergenceError(f"run {r}: {exc}", step=exc.step, run=r) from None
        log.info("%s run %d: accuracy %.4f mse %.4f", spec.name, r, metrics.accuracy, metrics.mse)
        bundle.runs.append(metrics)
    return bundle


def fc_sweep(widths_i: Sequence[int], widths_j: Sequence[int], dataset: ImageSet, R: int = 10,
             base_seed: int = 0, cfg: TrainConfig | None = None,
             builder: Callable[[int, int], ModelSpec] | None = None, **run_kw) -> list[ReportBundle]:
    """One bundle per (i, j) width pair; ``j = 0`` means a single hidden FC layer."""
    if not widths_i or not widths_j:
        raise ValueError("width lists must be non-empty")
    if builder is None:
        M = dataset.pixels.shape[1]
        builder = lambda i, j: build_preset("alexnet-mod", i, j, dataset.n_classes, M)
    return [repeated_runs(builder(i, j), dataset, R, base_seed, cfg, **run_kw)
            for i in widths_i for j in widths_j]


# -- tables ------------------------------------------------------------------

_TITLES = {"accuracy": "Accuracy", "precision": "Precision", "recall": "Recall", "f1": "F1", "mse": "MSE"}


def table_rows(bundles: Sequence[ReportBundle]) -> list[tuple[str, str, list[float]]]:
    """(metric, stat, one value per model) rows in metric-major order."""
    return [(m, s, [b.stat(m, s) for b in bundles]) for m in METRICS for s in STATS]


def _fmt(metric, stat, v):
    if metric == "mse":
        return f"{v:.5f}" if stat != "std" else f"{v:.4f}"
    if stat == "std":
        return f"{100 * v:.4f}"
    return f"{100 * v:.2f}%"


def render_text(bundles: Sequence[ReportBundle]) -> str:
    """Metric blocks of Max/Min/Mean/Std rows, one column per model.

    Percent metrics print as percentages and their std in percentage points.
    """
    names = [b.model for b in bundles]
    width = max(12, *(len(n) + 2 for n in names))
    head = "No.".ljust(8) + "".join(n.rjust(width) for n in names)
    rule = "-" * len(head)
    out = [head, rule]
    for m in METRICS:
        out.append(_TITLES[m].center(len(head)))
        out.append(rule)
        for s in STATS:
            cells = "".join(_fmt(m, s, b.stat(m, s)).rjust(width) for b in bundles)
            out.append(s.capitalize().ljust(8) + cells)
        out.append(rule)
    return "\n".join(out)


def render_csv(bundles: Sequence[ReportBundle]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "stat"] + [b.model for b in bundles])
    for m, s, vals in table_rows(bundles):
        w.writerow([m, s] + [repr(v) for v in vals])
    return buf.getvalue()


def save_bundles(bundles: Sequence[ReportBundle], path):
    with open(path, "w") as fh:
        json.dump([b.to_dict() for b in bundles], fh, indent=2)


def load_bundles(path) -> list[ReportBundle]:
    with open(path) as fh:
        return [ReportBundle.from_dict(d) for d in json.load(fh)]
