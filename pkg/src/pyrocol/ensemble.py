"""Combines the three trained learners per task.

Classification (spalling) uses unweighted majority voting over the
members' thresholded labels. Regression (fire resistance) selects the
fittest member by validation RMSE, with mean-averaging available by
config. Rating classes are half-open hour bins over predicted minutes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .dataset import (
    ColumnRecord,
    Dataset,
    Encoder,
    SplitLabel,
    Task,
    make_encoder,
    neural_from_tree,
    validate_record,
)
from .errors import (
    MissingSplitError,
    MissingTargetError,
    NegativeInputError,
    UnfittedModelError,
    ValidationFailedError,
)
from .metrics import log_loss, rmse
from .mlp import MlpModel, MlpParams, fit_mlp, mlp_predict
from .trees import (
    ForestModel,
    ForestParams,
    GbtModel,
    GbtParams,
    fit_forest,
    fit_gbt,
    forest_predict,
    forest_proba,
    gbt_predict,
)

MEMBER_ORDER = ("forest", "gbt", "mlp")


class Policy(str, Enum):
    MAJORITY_VOTE = "majority_vote"
    SELECT_FITTEST = "select_fittest"
    MEAN_AVERAGE = "mean_average"


class RatingClass(str, Enum):
    SUB_HOUR = "sub_hour"
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"


_RATING_ORDER = [RatingClass.SUB_HOUR, RatingClass.R1, RatingClass.R2,
                 RatingClass.R3, RatingClass.R4]


def rating_class(fr_minutes: float) -> RatingClass:
    """Half-open hour bins: <60, [60,120), [120,180), [180,240), >=240."""
    if fr_minutes < 0:
        raise NegativeInputError(f"fire resistance cannot be negative: {fr_minutes}")
    if fr_minutes < 60:
        return RatingClass.SUB_HOUR
    if fr_minutes < 120:
        return RatingClass.R1
    if fr_minutes < 180:
        return RatingClass.R2
    if fr_minutes < 240:
        return RatingClass.R3
    return RatingClass.R4


def vote_classify(preds: Sequence) -> object:
    """Label held by at least two members; a three-way disagreement falls back
    to the most conservative (lowest-ordered) label."""
    if len(preds) != 3:
        raise ValueError("vote expects exactly three member labels")
    for label in preds:
        if sum(1 for p in preds if p == label) >= 2:
            return label
    ordered = sorted(preds, key=lambda p: (_RATING_ORDER.index(p)
                                           if isinstance(p, RatingClass) else p))
    return ordered[0]


@dataclass(frozen=True)
class FitnessRecord:
    metric: str
    train: float
    validation: float


@dataclass(frozen=True)
class EnsembleConfig:
    seed: int = 0
    policy: Optional[Policy] = None  # None -> per-task default
    val_fraction: float = 0.15
    forest: ForestParams = ForestParams()
    gbt: GbtParams = GbtParams()
    mlp: MlpParams = MlpParams()

    def resolve_policy(self, task: Task) -> Policy:
        if self.policy is not None:
            return self.policy
        return Policy.MAJORITY_VOTE if task is Task.SPALLING else Policy.SELECT_FITTEST


@dataclass
class EnsembleModel:
    task: Task
    policy: Policy
    forest: ForestModel
    gbt: GbtModel
    mlp: MlpModel
    tree_encoder: Encoder
    neural_encoder: Encoder
    fitness: dict[str, FitnessRecord]
    chosen: Optional[str] = None  # member id under SELECT_FITTEST
    seed: int = 0

    def members(self) -> dict[str, object]:
        return {"forest": self.forest, "gbt": self.gbt, "mlp": self.mlp}

    def _check(self):
        if self.forest is None or self.gbt is None or self.mlp is None:
            raise UnfittedModelError("ensemble is missing members")


@dataclass(frozen=True)
class Prediction:
    record_id: str
    per_member: dict[str, float]
    sp_probability: Optional[float] = None
    sp_label: Optional[bool] = None
    fr_minutes: Optional[float] = None
    rating: Optional[RatingClass] = None


def _member_outputs(ens: EnsembleModel, X_tree: np.ndarray,
                    X_neural: np.ndarray) -> dict[str, np.ndarray]:
    """Raw member outputs: probabilities for spalling, minutes for regression."""
    if ens.task is Task.SPALLING:
        return {
            "forest": forest_proba(ens.forest, X_tree)[:, 1],
            "gbt": gbt_predict(ens.gbt, X_tree),
            "mlp": mlp_predict(ens.mlp, X_neural),
        }
    return {
        "forest": forest_predict(ens.forest, X_tree),
        "gbt": gbt_predict(ens.gbt, X_tree),
        "mlp": mlp_predict(ens.mlp, X_neural),
    }


def fit_ensemble(ds: Dataset, task: Task, config: EnsembleConfig = EnsembleConfig()) -> EnsembleModel:
    """Train the three members on the train split with a 15% validation carve-out
    for fitness; SELECT_FITTEST keeps the member with the best validation metric."""
    model_task = Task.FIRE_RESISTANCE if task is Task.RATING_CLASS else task
    policy = config.resolve_policy(model_task)
    if model_task is Task.SPALLING and policy is not Policy.MAJORITY_VOTE:
        raise ValueError("spalling classification combines members by majority vote")
    if model_task is not Task.SPALLING and policy is Policy.MAJORITY_VOTE:
        raise ValueError("majority vote applies to classification tasks only")
    if ds.split is None:
        raise MissingSplitError("dataset must carry a train/test split")
    train = ds.subset(SplitLabel.TRAIN).for_task(model_task)
    if len(train) < 4:
        raise MissingTargetError("not enough labelled training records")

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(train))
    n_val = max(1, int(round(config.val_fraction * len(train))))
    val_idx, fit_idx = order[:n_val], order[n_val:]
    fit_records = [train.records[i] for i in fit_idx]
    val_records = [train.records[i] for i in val_idx]

    tree_enc = make_encoder(model_task, "tree", ds.schema)
    neural_enc = make_encoder(model_task, "neural", ds.schema)
    Xt = tree_enc.encode_matrix(fit_records)
    Xn = neural_enc.encode_matrix(fit_records)
    y = np.array([float(r.SP) if model_task is Task.SPALLING else float(r.FR)
                  for r in fit_records])
    Xt_val = tree_enc.encode_matrix(val_records)
    Xn_val = neural_enc.encode_matrix(val_records)
    y_val = np.array([float(r.SP) if model_task is Task.SPALLING else float(r.FR)
                      for r in val_records])

    is_cls = model_task is Task.SPALLING
    forest = fit_forest(
        Xt, y, "classification" if is_cls else "regression",
        replace(config.forest, seed=config.seed),
        feature_names=list(tree_enc.columns))
    gbt = fit_gbt(
        Xt, y, replace(config.gbt, seed=config.seed),
        loss="logistic" if is_cls else "squared",
        feature_names=list(tree_enc.columns))
    mlp = fit_mlp(
        Xn, y, replace(config.mlp, seed=config.seed),
        loss="logistic" if is_cls else "squared",
        X_val=Xn_val, y_val=y_val)

    ens = EnsembleModel(model_task if task is not Task.RATING_CLASS else task,
                        policy, forest, gbt, mlp,
                        tree_enc, neural_enc, {}, seed=config.seed)
    train_out = _member_outputs(ens, Xt, Xn)
    val_out = _member_outputs(ens, Xt_val, Xn_val)
    metric_name = "log_loss" if is_cls else "rmse"
    metric = log_loss if is_cls else rmse
    for member in MEMBER_ORDER:
        ens.fitness[member] = FitnessRecord(
            metric_name,
            metric(y, train_out[member]),
            metric(y_val, val_out[member]),
        )
    ens.chosen = min(MEMBER_ORDER, key=lambda k: (ens.fitness[k].validation,
                                                  MEMBER_ORDER.index(k)))
    return ens


def predict_batch(ens: EnsembleModel, records: Sequence[ColumnRecord],
                  validate: bool = True) -> list[Prediction]:
    ens._check()
    model_task = Task.FIRE_RESISTANCE if ens.task is Task.RATING_CLASS else ens.task
    if validate:
        for rec in records:
            problems = [v for v in validate_record(rec, ens.tree_encoder.schema)
                        if not v.warning and v.field != "targets"]
            if problems:
                raise ValidationFailedError(problems)
    if not records:
        return []
    Xt = ens.tree_encoder.encode_matrix(records)
    Xn = ens.neural_encoder.encode_matrix(records)
    outputs = _member_outputs(ens, Xt, Xn)

    results = []
    for i, rec in enumerate(records):
        per_member = {k: float(outputs[k][i]) for k in MEMBER_ORDER}
        if model_task is Task.SPALLING:
            labels = [per_member[k] >= 0.5 for k in MEMBER_ORDER]
            label = vote_classify(labels)
            results.append(Prediction(rec.id, per_member,
                                      sp_probability=float(np.mean(list(per_member.values()))),
                                      sp_label=bool(label)))
        else:
            if ens.policy is Policy.MEAN_AVERAGE:
                fr = float(np.mean(list(per_member.values())))
            else:
                fr = per_member[ens.chosen]
            fr_clipped = max(fr, 0.0)
            results.append(Prediction(rec.id, per_member, fr_minutes=fr,
                                      rating=rating_class(fr_clipped)))
    return results


def predict(ens: EnsembleModel, rec: ColumnRecord, validate: bool = True) -> Prediction:
    return predict_batch(ens, [rec], validate)[0]


def ensemble_model_fn(ens: EnsembleModel):
    """Vectorized callable over tree-encoded rows producing the explained quantity:
    ensemble probability (mean of member probabilities) for spalling, the
    policy output (chosen member or mean) for fire resistance."""
    ens._check()
    model_task = Task.FIRE_RESISTANCE if ens.task is Task.RATING_CLASS else ens.task

    def fn(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Xn = neural_from_tree(model_task, ens.tree_encoder.schema, X)
        outputs = _member_outputs(ens, X, Xn)
        if model_task is Task.SPALLING:
            return np.mean([outputs[k] for k in MEMBER_ORDER], axis=0)
        if ens.policy is Policy.MEAN_AVERAGE:
            return np.mean([outputs[k] for k in MEMBER_ORDER], axis=0)
        return outputs[ens.chosen]

    return fn
