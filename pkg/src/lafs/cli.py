"""Command-line entry point.

Subcommands: ``preprocess`` (raw KDD to encoded+scaled CSV), ``synth``
(oracle dataset generation), ``select`` (the selection run, emitting the
JSON report, trace CSV, model, and timing sidecar), and ``evaluate``
(baseline-vs-reduced comparison table). Flag values override config-file
values, which override built-in defaults; the effective configuration is
echoed into every report. Measured durations are confined to timing
sections and files so report bodies stay byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import dataset as ds
from . import engine, synth, svm
from .errors import LafsError

log = logging.getLogger(__name__)

OUT_DIR_ENV = "LAFS_OUT_DIR"


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _stem(path) -> str:
    name = Path(path).name
    if name.endswith(".gz"):
        name = name[:-3]
    return name.rsplit(".", 1)[0] if "." in name else name


def _write_json(doc: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_preprocess(args) -> int:
    out = _out_dir(args)
    records = ds.parse_kdd(args.raw)
    if args.meta:
        with open(args.meta, encoding="utf-8") as fh:
            meta = json.load(fh)
        schema = ds.Schema.from_dict(meta["schema"])
        params = ds.ScalingParams.from_dict(meta["scaling"])
        encoded = ds.encode(records, schema, allow_unknown=True)
    else:
        attack_map = ds.parse_attack_map(args.attack_map) if args.attack_map else None
        schema = ds.build_schema(records, attack_map)
        encoded = ds.encode(records, schema, allow_unknown=False)
        params = ds.scale_fit(encoded)
    scaled = ds.scale_apply(encoded, params)

    stem = _stem(args.raw)
    csv_path = out / f"{stem}.encoded.csv"
    meta_path = out / f"{stem}.meta.json"
    ds.save_csv(scaled, csv_path)
    _write_json({"schema": schema.to_dict(), "scaling": params.to_dict()}, meta_path)
    print(f"wrote {csv_path} ({scaled.n_rows} rows x {scaled.n_features} features)")
    print(f"wrote {meta_path}")
    return 0


def cmd_synth(args) -> int:
    out = _out_dir(args)
    spec = synth.SynthSpec(
        n_samples=args.samples,
        n_informative=args.informative,
        n_noise=args.noise,
        n_classes=args.classes,
        margin=args.margin,
        seed=args.seed,
    )
    data, noise_ids = synth.generate(spec)
    csv_path = out / "synth.csv"
    truth_path = out / "ground_truth.json"
    ds.save_csv(data, csv_path)
    synth.save_ground_truth(noise_ids, truth_path)
    print(f"wrote {csv_path} ({data.n_rows} rows x {data.n_features} features)")
    print(f"wrote {truth_path} (noise features: {sorted(noise_ids)})")
    return 0


def _selection_config(args) -> engine.SelectionConfig:
    values: dict = {}
    svm_values: dict = {}
    subset_values: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        svm_values.update(doc.pop("svm", {}))
        subset_values.update(doc.pop("subset_spec", {}))
        values.update(doc)

    flag_map = {
        "t2": args.t2,
        "delta": args.delta,
        "pool_size": args.pool_size,
        "t1_offset": args.t1_offset,
        "budget": args.budget,
        "min_features": args.min_features,
        "seed": args.seed,
        "holdout_fraction": args.holdout_fraction,
    }
    values.update({k: v for k, v in flag_map.items() if v is not None})
    if args.recalibrate:
        values["recalibrate"] = True
    if args.svm_c is not None:
        svm_values["C"] = args.svm_c
    if args.svm_epochs is not None:
        svm_values["max_epochs"] = args.svm_epochs
    if args.normal_quota is not None:
        subset_values["normal_quota"] = args.normal_quota
    if args.attack_quota is not None:
        subset_values["attack_quota"] = args.attack_quota

    values["svm"] = svm.SvmConfig(**svm_values)
    values["subset_spec"] = ds.SubsetSpec(**subset_values)
    return engine.SelectionConfig(**values)


def cmd_select(args) -> int:
    out = _out_dir(args)
    cfg = _selection_config(args)
    train = ds.load_csv(args.dataset)
    test = ds.load_csv(args.test) if args.test else None
    result = engine.run_selection(train, cfg, test)

    engine.write_report(result, out / "report.json")
    engine.write_trace_csv(result, out / "trace.csv")
    engine.write_timing(result, out / "timing.json")
    svm.save_model(result.final_model, out / "model.json", cfg.svm)

    metrics = result.final_metrics
    print(f"termination: {result.termination} "
          f"after {len(result.trace)} iterations, {len(result.removals)} removals")
    print(f"surviving features: {list(result.surviving)}")
    print(f"accuracy: baseline {metrics.baseline_accuracy:.4f} "
          f"({metrics.baseline_features} features) -> reduced "
          f"{metrics.reduced_accuracy:.4f} ({metrics.reduced_features} features)")
    print(f"predict time: {metrics.baseline_predict_seconds:.6f}s -> "
          f"{metrics.reduced_predict_seconds:.6f}s "
          f"(speedup {metrics.speedup:.2f}x)")
    print(f"wrote {out / 'report.json'}, {out / 'trace.csv'}, "
          f"{out / 'timing.json'}, {out / 'model.json'}")
    return 0


def _load_removed(args, universe) -> list[int]:
    if args.removed:
        with open(args.removed, encoding="utf-8") as fh:
            doc = json.load(fh)
        removed = doc if isinstance(doc, list) else doc["removed_features"]
        return [int(v) for v in removed]
    kept = {int(v) for v in args.keep.split(",")}
    unknown = kept - set(universe)
    if unknown:
        raise LafsError(f"kept features {sorted(unknown)} not in the dataset")
    return [fid for fid in universe if fid not in kept]


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    train = ds.load_csv(args.train)
    test = ds.load_csv(args.test)
    if train.feature_ids != test.feature_ids:
        raise LafsError("train and test files disagree on feature columns")
    removed = _load_removed(args, train.feature_ids)
    svm_cfg = svm.SvmConfig(
        C=args.svm_c if args.svm_c is not None else 1.0,
        max_epochs=args.svm_epochs if args.svm_epochs is not None else 100,
        shuffle_seed=args.seed if args.seed is not None else 0,
    )
    evaluation = engine.evaluate_final(train, test, removed, svm_cfg)
    metrics = evaluation.metrics

    doc = {
        "removed_features": sorted(removed),
        "kept_features": [f for f in train.feature_ids if f not in set(removed)],
        "accuracy": metrics.accuracy_dict(),
        "timing": metrics.timing_dict(),
    }
    _write_json(doc, out / "evaluation.json")

    rows = [
        ("model", "features", "accuracy", "predict_s"),
        ("baseline", str(metrics.baseline_features),
         f"{metrics.baseline_accuracy:.6f}",
         f"{metrics.baseline_predict_seconds:.6f}"),
        ("reduced", str(metrics.reduced_features),
         f"{metrics.reduced_accuracy:.6f}",
         f"{metrics.reduced_predict_seconds:.6f}"),
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    table = "\n".join(
        "  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row))
        for row in rows
    )
    with open(out / "evaluation.txt", "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    print(table)
    print(f"wrote {out / 'evaluation.json'}, {out / 'evaluation.txt'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lafs",
        description="Learning-automata feature selection with a linear SVM wrapper",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="encode and scale a raw KDD file")
    p.add_argument("raw", help="raw KDD CSV (42 fields per line; .gz accepted)")
    p.add_argument("--attack-map", help="attack_name,category lines merged over the default map")
    p.add_argument("--meta", help="meta JSON from a previous run; reuse its schema and scaling")
    p.add_argument("--out", help=f"output directory (default: ${OUT_DIR_ENV} or .)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="generate a synthetic dataset with planted noise")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--informative", type=int, default=5)
    p.add_argument("--noise", type=int, default=10)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--margin", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help=f"output directory (default: ${OUT_DIR_ENV} or .)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("select", help="run the feature selection loop")
    p.add_argument("dataset", help="encoded dataset CSV (generic format)")
    p.add_argument("--test", help="held-out test CSV; default splits one off the input")
    p.add_argument("--config", help="JSON config file (flags take precedence)")
    p.add_argument("--t1-offset", type=float, default=None, dest="t1_offset")
    p.add_argument("--t2", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--pool-size", type=int, default=None, dest="pool_size")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--min-features", type=int, default=None, dest="min_features")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--svm-c", type=float, default=None, dest="svm_c")
    p.add_argument("--svm-epochs", type=int, default=None, dest="svm_epochs")
    p.add_argument("--recalibrate", action="store_true")
    p.add_argument("--holdout-fraction", type=float, default=None,
                   dest="holdout_fraction")
    p.add_argument("--normal-quota", type=int, default=None, dest="normal_quota")
    p.add_argument("--attack-quota", type=int, default=None, dest="attack_quota")
    p.add_argument("--out", help=f"output directory (default: ${OUT_DIR_ENV} or .)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="baseline vs reduced comparison")
    p.add_argument("train", help="training CSV (generic format)")
    p.add_argument("test", help="test CSV (generic format)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--removed", help="JSON list of removed feature ids")
    group.add_argument("--keep", help="comma-separated feature ids to keep")
    p.add_argument("--svm-c", type=float, default=None, dest="svm_c")
    p.add_argument("--svm-epochs", type=int, default=None, dest="svm_epochs")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help=f"output directory (default: ${OUT_DIR_ENV} or .)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (LafsError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
