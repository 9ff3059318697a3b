#!/usr/bin/env python3
"""End-to-end study on the generated benchmark corpus.

Generates a corpus with documented target rules, splits 70/30, trains the
three-member ensemble for both tasks, then reports classification metrics,
regression metrics, feature importances and the design-code comparison.

    python3 scripts/run_benchmark_experiment.py --n 1000 --seed 2025
    python3 scripts/run_benchmark_experiment.py --fast   # desk-scale smoke run
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pyrocol.benchmark import BenchmarkSpec, gen_benchmark
from pyrocol.codal import codal_compare
from pyrocol.dataset import SplitLabel, Task, split_train_test
from pyrocol.ensemble import (
    EnsembleConfig,
    ensemble_model_fn,
    fit_ensemble,
    predict_batch,
)
from pyrocol.explain import cap_background, importance
from pyrocol.metrics import confusion, log_loss, pearson_r, r_squared, rmse, roc_auc
from pyrocol.mlp import MlpParams
from pyrocol.trees import ForestParams, GbtParams


def build_config(seed: int, fast: bool) -> EnsembleConfig:
    if fast:
        return EnsembleConfig(
            seed=seed,
            forest=ForestParams(n_trees=25, seed=seed),
            gbt=GbtParams(n_stages=60, max_depth=6, seed=seed),
            mlp=MlpParams(hidden=(32,), epochs=80, seed=seed),
        )
    return EnsembleConfig(seed=seed, forest=ForestParams(seed=seed),
                          gbt=GbtParams(seed=seed), mlp=MlpParams(seed=seed))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=2025)
    parser.add_argument("--fast", action="store_true",
                        help="small members for a quick smoke run")
    args = parser.parse_args()

    print(f"generating corpus: n={args.n}, seed={args.seed}")
    ds = split_train_test(gen_benchmark(BenchmarkSpec(n=args.n, seed=args.seed)),
                          0.70, seed=args.seed)
    config = build_config(args.seed, args.fast)

    print("training spalling ensemble (majority vote)...")
    t0 = time.perf_counter()
    spalling = fit_ensemble(ds, Task.SPALLING, config)
    print(f"  done in {time.perf_counter() - t0:.1f}s, "
          f"fittest member by validation: {spalling.chosen}")

    print("training fire-resistance ensemble (fittest member)...")
    t0 = time.perf_counter()
    fire = fit_ensemble(ds, Task.FIRE_RESISTANCE, config)
    print(f"  done in {time.perf_counter() - t0:.1f}s, chosen: {fire.chosen}")

    test_sp = ds.subset(SplitLabel.TEST).for_task(Task.SPALLING)
    preds = predict_batch(spalling, list(test_sp.records), validate=False)
    y = np.array([float(r.SP) for r in test_sp.records])
    p = np.array([pr.sp_probability for pr in preds])
    votes = np.array([float(pr.sp_label) for pr in preds])
    stats = confusion(y, votes)
    print("\nspalling, held-out test split:")
    print(f"  log loss    {log_loss(y, p):.3f}")
    print(f"  ROC AUC     {roc_auc(y, p):.3f}")
    print(f"  sensitivity {stats.sensitivity:.2f}  fallout {stats.fallout:.2f}  "
          f"precision {stats.precision:.2f}  accuracy {stats.accuracy:.2f}")

    test_fr = ds.subset(SplitLabel.TEST).for_task(Task.FIRE_RESISTANCE)
    fr_preds = predict_batch(fire, list(test_fr.records), validate=False)
    y_fr = np.array([float(r.FR) for r in test_fr.records])
    p_fr = np.array([pr.fr_minutes for pr in fr_preds])
    print("\nfire resistance, held-out test split:")
    print(f"  R     {pearson_r(y_fr, p_fr):.3f}")
    print(f"  R2    {r_squared(y_fr, p_fr):.3f}")
    print(f"  RMSE  {rmse(y_fr, p_fr):.1f} min")

    print("\nfeature importances (mean |phi|, top = 100%):")
    train_sp = ds.subset(SplitLabel.TRAIN).for_task(Task.SPALLING)
    bg = cap_background(spalling.tree_encoder.encode_matrix(train_sp.records),
                        seed=args.seed)
    eval_rows = spalling.tree_encoder.encode_matrix(test_sp.records[:24])
    report = importance(ensemble_model_fn(spalling), eval_rows, bg,
                        feature_names=list(spalling.tree_encoder.columns))
    for name, score in sorted(report.as_dict().items(), key=lambda kv: -kv[1]):
        print(f"  spalling  {name:>3}  {score:5.1f}%")

    print("\ndesign-code comparison on the labelled corpus:")
    fr_fn = ensemble_model_fn(fire)

    def ens_predictor(rec):
        return float(fr_fn(fire.tree_encoder.encode(rec).reshape(1, -1))[0])

    for method, kwargs in (("ec2", {}), ("as3600", {"profile": "printed"}),
                           ("ensemble", {"predictor": ens_predictor})):
        result = codal_compare(ds, method, **kwargs)
        print(f"  {method:>8}  R {result.r:+.2f}  R2 {result.r2:+.2f}  "
              f"RMSE {result.rmse:9.1f}  (profile: {result.profile})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
