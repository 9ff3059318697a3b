"""Command-line interface: ingest, augment, train, evaluate, predict, explain,
compare-codal, gen-benchmark, benchmark-throughput, serve.

All randomness flows through --seed. Failures print a machine-readable
JSON object on stderr and exit nonzero. The optional config file uses
`key = value` lines with dotted keys (forest.n_trees = 100); see README.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import benchmark, persistence
from .augment import build_pairs, ingest_augmented, synthesize_pairs_report
from .codal import PROFILES, codal_compare
from .dataset import (
    DEFAULT_SCHEMA,
    Dataset,
    SplitLabel,
    Task,
    load_csv,
    split_train_test,
    summarize,
    validate_record,
    write_csv,
)
from .ensemble import (
    EnsembleConfig,
    Policy,
    ensemble_model_fn,
    fit_ensemble,
    predict_batch,
)
from .errors import PyrocolError
from .explain import cap_background, shapley_exact, shapley_sampled
from .metrics import confusion, log_loss, pearson_r, r_squared, rmse, roc_auc
from .mlp import MlpParams
from .trees import ForestParams, GbtParams


def _fail(verb: str, exc: Exception, code: int = 1) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "verb": verb}
    print(json.dumps(payload), file=sys.stderr)
    return code


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# --- config file --------------------------------------------------------------


def parse_config_file(path) -> dict[str, str]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _coerce(current, raw: str):
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        return tuple(int(v) for v in raw.split(",") if v.strip())
    return raw


def build_config(seed: int, overrides: dict[str, str]) -> EnsembleConfig:
    config = EnsembleConfig(seed=seed,
                            forest=replace(ForestParams(), seed=seed),
                            gbt=replace(GbtParams(), seed=seed),
                            mlp=replace(MlpParams(), seed=seed))
    groups = {"forest": config.forest, "gbt": config.gbt, "mlp": config.mlp}
    for key, raw in overrides.items():
        if key == "policy":
            config = replace(config, policy=Policy(raw))
        elif key == "val_fraction":
            config = replace(config, val_fraction=float(raw))
        elif "." in key:
            group, attr = key.split(".", 1)
            if group not in groups:
                raise ValueError(f"unknown config group {group!r}")
            current = getattr(groups[group], attr)  # raises for unknown attrs
            groups[group] = replace(groups[group], **{attr: _coerce(current, raw)})
        else:
            raise ValueError(f"unknown config key {key!r}")
    return replace(config, forest=groups["forest"], gbt=groups["gbt"], mlp=groups["mlp"])


# --- verbs ---------------------------------------------------------------------


def cmd_ingest(args) -> int:
    ds = load_csv(args.data)
    warnings = {}
    for rec in ds.records:
        notes = [str(v) for v in validate_record(rec, ds.schema, strict=True) if v.warning]
        if notes:
            warnings[rec.id] = notes
    stats = summarize(ds, group_by_provenance=args.by_provenance) if len(ds) >= 2 else []
    report = {
        "records": len(ds),
        "provenance_counts": ds.provenance_counts(),
        "strict_warnings": warnings,
        "stats": [dataclasses.asdict(s) for s in stats],
    }
    if args.matrices:
        from .explain import association_for_task, correlation_for_task, write_matrix_csv

        written = []
        for task in (Task.SPALLING, Task.FIRE_RESISTANCE):
            if len(ds.for_task(task)) < 2 * args.bins:
                continue
            assoc = association_for_task(ds, task, bins=args.bins)
            corr = correlation_for_task(ds, task)
            for kind, matrix in (("association", assoc), ("correlation", corr)):
                path = f"{args.matrices}_{kind}_{task.value}.csv"
                write_matrix_csv(matrix, path)
                written.append(path)
        report["matrix_files"] = written
    _emit(report)
    return 0


def cmd_augment(args) -> int:
    ds = load_csv(args.data)
    if args.ingest_augmented:
        merged = ingest_augmented(ds, args.ingest_augmented)
        write_csv(merged, args.out)
        _emit({"written": args.out, "records": len(merged),
               "provenance_counts": merged.provenance_counts()})
        return 0
    plan = build_pairs(ds, args.target_count, args.seed)
    report = synthesize_pairs_report(ds, plan)
    out_ds = Dataset(tuple(report.records), ds.schema)
    write_csv(out_ds, args.out)
    meta = {
        "written": args.out,
        "pairs": len(plan.pairs),
        "synthetic_records": len(report.records),
        "categorical_disagreements": report.categorical_disagreements,
        "distance_metric": plan.distance_metric,
    }
    if args.meta:
        with open(args.meta, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
    _emit(meta)
    return 0


def _train_once(args):
    task = Task(args.task)
    ds = load_csv(args.data)
    task_ds = ds.for_task(task)
    split_ds = split_train_test(task_ds, args.fraction, args.seed,
                                stratify_on="SP" if args.stratify else None)
    overrides = parse_config_file(args.config) if args.config else {}
    config = build_config(args.seed, overrides)
    ens = fit_ensemble(split_ds, task, config)
    return ds, split_ds, ens, config


def cmd_train(args) -> int:
    ds, split_ds, ens, _ = _train_once(args)
    stamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()) if args.stamp else None
    bundle = persistence.bundle_dict(ens, args.seed, args.fraction,
                                     ds.provenance_counts(), trained_at=stamp)
    persistence.save_model(bundle, args.out)
    _emit({
        "written": args.out,
        "task": ens.task.value,
        "policy": ens.policy.value,
        "chosen": ens.chosen,
        "fitness": {k: dataclasses.asdict(v) for k, v in ens.fitness.items()},
        "train_records": sum(1 for v in split_ds.split.values() if v is SplitLabel.TRAIN),
        "test_records": sum(1 for v in split_ds.split.values() if v is SplitLabel.TEST),
    })
    return 0


def _load_model(path):
    bundle = persistence.load_bundle(path)
    ens = persistence.restore_ensemble(bundle, DEFAULT_SCHEMA)
    with open(path, "rb") as fh:
        fingerprint = hashlib.sha256(fh.read()).hexdigest()
    return bundle, ens, fingerprint


def cmd_evaluate(args) -> int:
    bundle, ens, fingerprint = _load_model(args.model)
    ds = load_csv(args.data)
    task = ens.task if ens.task is not Task.RATING_CLASS else Task.FIRE_RESISTANCE
    eval_ds = ds.for_task(task)
    if args.resplit:
        eval_ds = split_train_test(
            eval_ds, bundle["metadata"]["split_fraction"],
            bundle["metadata"]["seed"]).subset(SplitLabel.TEST)
    if len(eval_ds) == 0:
        return _fail("evaluate", PyrocolError("no labelled records to evaluate"))
    preds = predict_batch(ens, list(eval_ds.records), validate=False)
    report = {"task": task.value, "n": len(eval_ds), "model_fingerprint": fingerprint}
    if task is Task.SPALLING:
        y = np.array([float(r.SP) for r in eval_ds.records])
        p = np.array([pr.sp_probability for pr in preds])
        votes = np.array([float(pr.sp_label) for pr in preds])
        stats = confusion(y, votes)
        report.update({
            "log_loss": log_loss(y, p),
            "roc_auc": roc_auc(y, p),
            "confusion": dataclasses.asdict(stats),
        })
    else:
        y = np.array([float(r.FR) for r in eval_ds.records])
        p = np.array([pr.fr_minutes for pr in preds])
        report.update({
            "pearson_r": pearson_r(y, p),
            "r_squared": r_squared(y, p),
            "rmse": rmse(y, p),
        })
    _emit(report)
    return 0


PRED_HEADER = ["id", "sp_probability", "sp_label", "fr_minutes", "rating_class",
               "member_forest", "member_gbt", "member_mlp"]


def cmd_predict(args) -> int:
    _, ens, fingerprint = _load_model(args.model)
    ds = load_csv(args.data, require_target=False)
    preds = predict_batch(ens, list(ds.records), validate=False)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PRED_HEADER)
        for pr in preds:
            writer.writerow([
                pr.record_id,
                "" if pr.sp_probability is None else repr(pr.sp_probability),
                "" if pr.sp_label is None else int(pr.sp_label),
                "" if pr.fr_minutes is None else repr(pr.fr_minutes),
                "" if pr.rating is None else pr.rating.value,
                repr(pr.per_member["forest"]),
                repr(pr.per_member["gbt"]),
                repr(pr.per_member["mlp"]),
            ])
    _emit({"written": args.out, "records": len(preds), "model_fingerprint": fingerprint})
    return 0


def cmd_explain(args) -> int:
    _, ens, fingerprint = _load_model(args.model)
    ds = load_csv(args.data, require_target=False)
    if len(ds) == 0:
        return _fail("explain", PyrocolError("no records to explain"))
    rec = ds.by_id(args.id) if args.id else ds.records[0]
    task = ens.tree_encoder.task
    bg_source = load_csv(args.background) if args.background else ds
    usable = [r for r in bg_source.records
              if all(r.feature(f) is not None for f in task.features)]
    if not usable:
        return _fail("explain", PyrocolError("background has no usable records"))
    bg = cap_background(ens.tree_encoder.encode_matrix(usable), seed=args.seed)
    x = ens.tree_encoder.encode(rec)
    fn = ensemble_model_fn(ens)
    names = list(ens.tree_encoder.columns)
    mode = args.mode or ("exact" if len(names) <= 10 else "sampled")
    if mode == "exact":
        exp = shapley_exact(fn, x, bg, feature_names=names)
        meta = {"mode": "exact"}
    else:
        exp = shapley_sampled(fn, x, bg, n_permutations=args.permutations,
                              seed=args.seed, feature_names=names)
        meta = {"mode": "sampled", "n_permutations": args.permutations, "seed": args.seed}
    _emit({
        "id": rec.id,
        "task": task.value,
        "baseline": exp.baseline,
        "contributions": exp.contributions,
        "prediction": exp.prediction,
        "background_rows": int(len(bg)),
        "model_fingerprint": fingerprint,
        **meta,
    })
    return 0


def cmd_compare_codal(args) -> int:
    ds = load_csv(args.data, require_target=False)
    predictor = None
    if args.method == "ensemble":
        if not args.model:
            return _fail("compare-codal", PyrocolError("--model required for ensemble"))
        _, ens, _ = _load_model(args.model)
        fn = ensemble_model_fn(ens)

        def predictor(rec):
            return float(fn(ens.tree_encoder.encode(rec).reshape(1, -1))[0])

    result = codal_compare(ds, args.method, predictor=predictor,
                           mu_fi=args.mu_fi, profile=args.profile)
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "observed_FR", "predicted_FR", "method", "residual"])
            for rid, observed, predicted, residual in result.residuals:
                writer.writerow([rid, repr(observed), repr(predicted),
                                 result.method, repr(residual)])
    # goodness-of-fit reported for these formulas on the original fire-test
    # corpus; shown for orientation, never asserted against other data
    reference = {"ec2": {"R": 0.70, "R2": 0.49}, "as3600": {"R": 0.22, "R2": 0.05}}
    _emit({"method": result.method, "R": result.r, "R2": result.r2,
           "rmse": result.rmse, "n": result.n, "profile": result.profile,
           "published_reference": reference.get(args.method)})
    return 0


def cmd_gen_benchmark(args) -> int:
    spec = benchmark.BenchmarkSpec(n=args.n, seed=args.seed)
    ds = benchmark.gen_benchmark(spec)
    write_csv(ds, args.out)
    _emit({"written": args.out, "records": len(ds), "seed": args.seed})
    return 0


def cmd_benchmark_throughput(args) -> int:
    _, ens, fingerprint = _load_model(args.model)
    ds = benchmark.gen_benchmark(benchmark.BenchmarkSpec(n=args.n, seed=args.seed))
    records = list(ds.records)
    start = time.perf_counter()
    predict_batch(ens, records, validate=False)
    elapsed = time.perf_counter() - start
    _emit({
        "task": ens.task.value,
        "records": len(records),
        "seconds": elapsed,
        "records_per_second": len(records) / elapsed,
        "model_fingerprint": fingerprint,
    })
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    models, fingerprints = {}, {}
    for path in args.model:
        _, ens, fingerprint = _load_model(path)
        task = ens.task.value if ens.task is not Task.RATING_CLASS else "fire_resistance"
        models[task] = ens
        fingerprints[task] = fingerprint
    if args.background:
        bg_records = list(load_csv(args.background).records)
    else:
        bg_records = list(benchmark.gen_benchmark(
            benchmark.BenchmarkSpec(n=64, seed=args.seed)).records)
    app = create_app(models, fingerprints, batch_limit=args.batch_limit,
                     background_records=bg_records, explain_seed=args.seed)
    host = args.host or os.environ.get("PYRO_HOST", "127.0.0.1")
    port = args.port or int(os.environ.get("PYRO_PORT", "8330"))
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pyrocol", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="validate a corpus CSV and report statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--by-provenance", action="store_true")
    p.add_argument("--matrices", default=None,
                   help="path prefix for association/correlation matrix CSVs")
    p.add_argument("--bins", type=int, default=10)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("augment", help="generate synthetic records or merge augmented ones")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target-count", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--meta", default=None, help="write synthesis metadata JSON here")
    p.add_argument("--ingest-augmented", default=None,
                   help="augmented CSV to append instead of synthesizing")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train the three-member ensemble")
    p.add_argument("--task", required=True, choices=[t.value for t in Task])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=float, default=0.70)
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--config", default=None)
    p.add_argument("--stamp", action="store_true",
                   help="embed a wall-clock timestamp (breaks byte-identical retrains)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="compute metrics on a labelled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--resplit", action="store_true",
                   help="re-derive the stored split and evaluate its test part")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="batch predictions to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="Shapley attribution for one record")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--id", default=None)
    p.add_argument("--background", default=None)
    p.add_argument("--mode", choices=["exact", "sampled"], default=None)
    p.add_argument("--permutations", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("compare-codal", help="closed-form baselines vs observed FR")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=["ec2", "as3600", "ensemble"])
    p.add_argument("--model", default=None)
    p.add_argument("--mu-fi", type=float, default=None)
    p.add_argument("--profile", choices=sorted(PROFILES), default="printed")
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_compare_codal)

    p = sub.add_parser("gen-benchmark", help="generate the documented benchmark corpus")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_benchmark)

    p = sub.add_parser("benchmark-throughput", help="time a batch prediction")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_benchmark_throughput)

    p = sub.add_parser("serve", help="run the HTTP prediction service")
    p.add_argument("--model", action="append", required=True,
                   help="model file; repeat to serve both tasks")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--background", default=None,
                   help="CSV anchoring explanation expectations")
    p.add_argument("--batch-limit", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "augment" and not args.ingest_augmented and args.target_count is None:
        parser.error("augment requires --target-count or --ingest-augmented")
    try:
        return args.func(args)
    except PyrocolError as exc:
        return _fail(args.verb, exc)
    except FileNotFoundError as exc:
        return _fail(args.verb, exc)


if __name__ == "__main__":
    sys.exit(main())
