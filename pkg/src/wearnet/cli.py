"""Command line interface: ``wearnet <command> [--config FILE] ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .cnn.model import build_preset, load_checkpoint, save_checkpoint
from .cnn.train import predict
from .config import Config, ConfigError
from .errors import DataError, DivergenceError, FormatError, StructureError
from .features import TsfKind, compute_tsf, shannon_entropy, tsf_series
from .imaging import (DatasetWriter, ImagingConfig, balanced_indices, image_count, iter_snapshot_images,
                      load_dataset)
from .ingest import load_run, synth_run, write_run
from .labeling import WearLabeling, level_names
from .pipeline import label_series

log = logging.getLogger("wearnet")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGENCE = 0, 1, 2, 3

FEATURE_COLUMNS = ("index", "timestamp")
LABEL_COLUMNS = ("snapshot", "timestamp", "entropy", "level", "level_name")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- helpers -----------------------------------------------------------------

def _series(cfg: Config, args):
    directory = getattr(args, "data", None) or cfg.data.directory
    channel = args.channel if getattr(args, "channel", None) is not None else cfg.data.channel
    if directory:
        return load_run(directory, channel, cfg.data.expected_channels)
    if cfg.data.synthetic is not None:
        profile, seed = cfg.synthetic_profile()
        return synth_run(profile, seed)
    raise UsageError("no data: pass --data or set data.directory / data.synthetic in the config")


def _write_rows(path, header, rows):
    fh = open(path, "w", newline="") if path and path != "-" else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _safe_tsf(row, kind):
    try:
        return compute_tsf(row, kind)
    except DataError:
        return float("nan")


def _read_labels(path) -> dict[str, int]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"snapshot", "level"} <= set(reader.fieldnames):
            raise FormatError(f"{path}: expected columns {LABEL_COLUMNS}")
        return {row["snapshot"]: int(row["level"]) for row in reader}


def _dataset(args, cfg: Config):
    return load_dataset(args.images, cfg.labeling.K)


def _model_spec(cfg: Config, M: int, fc_i=None, fc_j=None):
    m = cfg.model
    return build_preset(m.preset, m.fc_i if fc_i is None else fc_i, m.fc_j if fc_j is None else fc_j,
                        cfg.labeling.K, M, m.width_div, m.same_padding)


# -- commands ----------------------------------------------------------------

def cmd_ingest(args, cfg: Config):
    series = _series(cfg, args)
    if args.out:
        write_run(series, args.out)
        print(f"wrote {len(series)} snapshot files to {args.out}")
        return
    rows = [(name, ts.isoformat(), series.samples_per_channel, _safe_tsf(row, TsfKind.RMS))
            for name, ts, row in zip(series.names, series.timestamps, series.data)]
    _write_rows("-", ("snapshot", "timestamp", "samples", "rms"), rows)


def cmd_features(args, cfg: Config):
    """Columns: index, timestamp, one per requested feature, then entropy.

    The entropy column uses the configured feature and window; it is empty
    for the first ``window - 1`` snapshots.
    """
    series = _series(cfg, args)
    kinds = [TsfKind.parse(k) for k in args.tsf.split(",")] if args.tsf else list(TsfKind)
    labeled_kind = TsfKind.parse(cfg.features.tsf)
    window = cfg.features.entropy_window
    values = np.array([[_safe_tsf(row, k) for k in kinds] for row in series.data])
    ent = shannon_entropy(tsf_series(series, labeled_kind), window) if window <= len(series) else []
    rows = []
    for i, ts in enumerate(series.timestamps):
        j = i - window + 1
        e = repr(float(ent[j])) if 0 <= j < len(ent) else ""
        rows.append([i, ts.isoformat()] + [repr(float(v)) for v in values[i]] + [e])
    header = list(FEATURE_COLUMNS) + [k.value for k in kinds] + [f"entropy_{labeled_kind.value}"]
    _write_rows(args.out, header, rows)


def cmd_label(args, cfg: Config):
    series = _series(cfg, args)
    lab = cfg.labeling
    run = label_series(series, cfg.features.tsf, cfg.features.entropy_window, lab.K, lab.seed, lab.two_d)
    w = cfg.features.entropy_window
    rows = []
    for i, (name, ts) in enumerate(zip(series.names, series.timestamps)):
        j = i - w + 1
        e = repr(float(run.features.entropy[j])) if j >= 0 else ""
        level = int(run.labeling.assignment[i])
        rows.append((name, ts.isoformat(), e, level, run.labeling.level_names[level]))
    _write_rows(args.out, LABEL_COLUMNS, rows)
    counts = run.labeling.counts()
    log.info("snapshots per level: %s", dict(zip(run.labeling.level_names, counts.tolist())))


def cmd_imagify(args, cfg: Config):
    series = _series(cfg, args)
    K = cfg.labeling.K
    if args.labels:
        table = _read_labels(args.labels)
        missing = [n for n in series.names if n not in table]
        if missing:
            raise StructureError(f"{args.labels} has no label for snapshot {missing[0]}")
        assignment = np.array([table[n] for n in series.names])
        labeling = WearLabeling(K, np.zeros(K), assignment, level_names(K))
    else:
        lab = cfg.labeling
        labeling = label_series(series, cfg.features.tsf, cfg.features.entropy_window, lab.K,
                                lab.seed, lab.two_d).labeling
    M = args.M or cfg.imaging.M
    step = args.step or cfg.imaging.step
    seed = cfg.imaging.seed if args.seed is None else args.seed
    balance = cfg.imaging.balance if args.balance is None else args.balance
    icfg = ImagingConfig(M, step, seed)
    per_snapshot = image_count(series.samples_per_channel, M, step)
    image_labels = np.repeat(labeling.assignment, per_snapshot)
    keep = np.ones(image_labels.size, bool)
    if balance:
        keep[:] = False
        keep[balanced_indices(image_labels, K, seed)] = True
    with DatasetWriter(args.out) as writer:
        for k, images in enumerate(iter_snapshot_images(series, labeling, icfg)):
            sel = keep[k * per_snapshot:(k + 1) * per_snapshot]
            if sel.any():
                writer.add(images.subset(np.flatnonzero(sel)))
    print(f"wrote {writer.count} images to {args.out}")


def cmd_train(args, cfg: Config):
    data = _dataset(args, cfg)
    seed = cfg.train.seed
    train, test = harness.split(data, cfg.eval.train_fraction, seed, cfg.eval.split_by_snapshot)
    spec = _model_spec(cfg, data.pixels.shape[1])
    log.info("\n%s", spec.describe())
    model, metrics, losses = harness.train_and_evaluate(spec, train, test, cfg.train_config(), seed)
    save_checkpoint(model, args.out)
    result = {"model": spec.name, "final_loss": losses[-1] if losses else None, **metrics.as_dict()}
    print(json.dumps(result, indent=2))


def cmd_eval(args, cfg: Config):
    data = _dataset(args, cfg)
    model = load_checkpoint(args.model)
    if args.split == "test":
        _, data = harness.split(data, cfg.eval.train_fraction, cfg.train.seed, cfg.eval.split_by_snapshot)
    preds = predict(model, data.pixels)
    metrics = harness.compute_metrics(preds, data.labels, model.spec.n_classes)
    out = {"model": model.spec.name, "images": len(data), **metrics.as_dict(),
           "confusion": metrics.confusion.tolist()}
    print(json.dumps(out, indent=2))


def cmd_sweep(args, cfg: Config):
    data = _dataset(args, cfg)
    M = data.pixels.shape[1]
    bundles = harness.fc_sweep(
        cfg.sweep.widths_i, cfg.sweep.widths_j, data, cfg.eval.runs, cfg.train.seed,
        cfg.train_config(), builder=lambda i, j: _model_spec(cfg, M, i, j),
        train_fraction=cfg.eval.train_fraction, by_snapshot=cfg.eval.split_by_snapshot,
    )
    harness.save_bundles(bundles, args.out)
    print(harness.render_text(bundles))


def cmd_report(args, cfg: Config):
    bundles = harness.load_bundles(args.results)
    text = harness.render_csv(bundles) if args.format == "csv" else harness.render_text(bundles) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wearnet", description="Bearing wear-level diagnosis from vibration data.")
    p.add_argument("--config", help="YAML/JSON configuration file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_opts(sp):
        sp.add_argument("--data", help="directory of snapshot files (overrides data.directory)")
        sp.add_argument("--channel", type=int, help="channel index (overrides data.channel)")

    sp = sub.add_parser("ingest", help="summarize a run, or write the synthetic run to disk")
    data_opts(sp)
    sp.add_argument("--out", help="write snapshot files to this directory")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("features", help="per-snapshot feature table")
    data_opts(sp)
    sp.add_argument("--tsf", help="comma-separated features (default: all eight)")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("label", help="wear-level labeling manifest")
    data_opts(sp)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_label)

    sp = sub.add_parser("imagify", help="convert labeled snapshots to a PGM image dataset")
    data_opts(sp)
    sp.add_argument("--labels", help="labeling manifest from `wearnet label` (default: recompute)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--M", type=int)
    sp.add_argument("--step", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--balance", dest="balance", action="store_true", default=None)
    sp.add_argument("--no-balance", dest="balance", action="store_false")
    sp.set_defaults(func=cmd_imagify)

    sp = sub.add_parser("train", help="train one model and save a checkpoint")
    sp.add_argument("--images", required=True, help="manifest.csv of an image dataset")
    sp.add_argument("--out", required=True, help="checkpoint path")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="score a checkpoint on an image dataset")
    sp.add_argument("--model", required=True)
    sp.add_argument("--images", required=True)
    sp.add_argument("--split", choices=("all", "test"), default="all",
                    help="'test' re-derives the held-out split used by `train`")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep", help="repeated runs over FC widths")
    sp.add_argument("--images", required=True)
    sp.add_argument("--out", required=True, help="results JSON")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="render sweep results as a table")
    sp.add_argument("--results", required=True)
    sp.add_argument("--format", choices=("text", "csv"), default="text")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = Config.load(args.config) if args.config else Config()
        args.func(args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"wearnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"wearnet: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (DataError, OSError) as exc:
        print(f"wearnet: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # remaining ValueErrors come from bad option or config values
        print(f"wearnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
