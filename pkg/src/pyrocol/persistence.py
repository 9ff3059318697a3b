"""Versioned JSON persistence for trained ensembles.

Bundles are plain JSON with full round-trip float precision (Python's
shortest-repr serialization), deterministic key order, and a schema
fingerprint checked at load and prediction time. Trees serialize as
parallel column arrays to keep large boosted models compact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from typing import Optional

import numpy as np

from .dataset import FeatureSchema, Task, make_encoder
from .ensemble import EnsembleModel, FitnessRecord, Policy
from .errors import (
    CorruptFileError,
    SchemaFingerprintMismatchError,
    VersionMismatchError,
)
from .mlp import MlpModel
from .trees import ForestModel, ForestParams, GbtModel, GbtParams, Tree

FORMAT_VERSION = 1


def schema_fingerprint(schema: FeatureSchema) -> str:
    payload = json.dumps([asdict(f) for f in schema.features],
                         sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _tree_to_json(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
        "n_samples": tree.n_samples.tolist(),
    }


def _tree_from_json(obj: dict) -> Tree:
    value = np.asarray(obj["value"], dtype=float)
    if value.ndim == 1:
        value = value.reshape(-1, 1)
    return Tree(
        feature=np.asarray(obj["feature"], dtype=np.int64),
        threshold=np.asarray(obj["threshold"], dtype=float),
        left=np.asarray(obj["left"], dtype=np.int64),
        right=np.asarray(obj["right"], dtype=np.int64),
        value=value,
        n_samples=np.asarray(obj["n_samples"], dtype=np.int64),
    )


def _forest_to_json(m: ForestModel) -> dict:
    return {
        "task": m.task,
        "feature_names": m.feature_names,
        "c_full": m.c_full.tolist(),
        "n_classes": m.n_classes,
        "train_mean": None if m.train_mean is None else m.train_mean.tolist(),
        "params": asdict(m.params),
        "trees": [_tree_to_json(t) for t in m.trees],
    }


def _forest_from_json(obj: dict) -> ForestModel:
    return ForestModel(
        trees=[_tree_from_json(t) for t in obj["trees"]],
        task=obj["task"],
        feature_names=list(obj["feature_names"]),
        c_full=np.asarray(obj["c_full"], dtype=float),
        params=ForestParams(**obj["params"]),
        n_classes=int(obj["n_classes"]),
        train_mean=None if obj["train_mean"] is None
        else np.asarray(obj["train_mean"], dtype=float),
    )


def _gbt_to_json(m: GbtModel) -> dict:
    return {
        "loss": m.loss,
        "base_score": m.base_score,
        "feature_names": m.feature_names,
        "params": asdict(m.params),
        "train_losses": m.train_losses,
        "stages": [_tree_to_json(t) for t in m.stages],
    }


def _gbt_from_json(obj: dict) -> GbtModel:
    return GbtModel(
        stages=[_tree_from_json(t) for t in obj["stages"]],
        loss=obj["loss"],
        base_score=float(obj["base_score"]),
        params=GbtParams(**obj["params"]),
        feature_names=list(obj["feature_names"]),
        train_losses=list(obj["train_losses"]),
    )


def _mlp_to_json(m: MlpModel) -> dict:
    return {
        "link": m.link,
        "weights": [w.tolist() for w in m.weights],
        "biases": [b.tolist() for b in m.biases],
        "alphas": [a.tolist() for a in m.alphas],
    }


def _mlp_from_json(obj: dict) -> MlpModel:
    return MlpModel(
        weights=[np.asarray(w, dtype=float) for w in obj["weights"]],
        biases=[np.asarray(b, dtype=float) for b in obj["biases"]],
        alphas=[np.asarray(a, dtype=float) for a in obj["alphas"]],
        link=obj["link"],
    )


def bundle_dict(ens: EnsembleModel, seed: int, split_fraction: float,
                provenance_counts: Optional[dict] = None,
                trained_at: Optional[str] = None) -> dict:
    """Serializable envelope; trained_at defaults to None so identical runs
    produce byte-identical files."""
    schema = ens.tree_encoder.schema
    return {
        "format_version": FORMAT_VERSION,
        "task": ens.task.value,
        "schema_fingerprint": schema_fingerprint(schema),
        "schema": [asdict(f) for f in schema.features],
        "ensemble": {
            "policy": ens.policy.value,
            "chosen": ens.chosen,
            "fitness": {k: asdict(v) for k, v in ens.fitness.items()},
        },
        "members": {
            "forest": _forest_to_json(ens.forest),
            "gbt": _gbt_to_json(ens.gbt),
            "mlp": _mlp_to_json(ens.mlp),
        },
        "metadata": {
            "seed": seed,
            "split_fraction": split_fraction,
            "trained_at": trained_at,
            "provenance_counts": provenance_counts or {},
        },
    }


def save_model(bundle: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bundle, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_bundle(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            bundle = json.load(fh)
    except (json.JSONDecodeError, OSError) as exc:
        raise CorruptFileError(f"cannot read model file: {exc}") from None
    for key in ("format_version", "task", "schema_fingerprint", "schema",
                "ensemble", "members", "metadata"):
        if key not in bundle:
            raise CorruptFileError(f"model file lacks {key!r}")
    if bundle["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"format_version {bundle['format_version']} unsupported "
            f"(expected {FORMAT_VERSION})")
    return bundle


def restore_ensemble(bundle: dict, schema: FeatureSchema) -> EnsembleModel:
    """Rebuild the ensemble against a live schema, verifying the fingerprint."""
    actual = schema_fingerprint(schema)
    if bundle["schema_fingerprint"] != actual:
        raise SchemaFingerprintMismatchError(
            f"model was trained against schema {bundle['schema_fingerprint'][:12]}..., "
            f"current schema is {actual[:12]}...")
    try:
        task = Task(bundle["task"])
        model_task = Task.FIRE_RESISTANCE if task is Task.RATING_CLASS else task
        ens = EnsembleModel(
            task=task,
            policy=Policy(bundle["ensemble"]["policy"]),
            forest=_forest_from_json(bundle["members"]["forest"]),
            gbt=_gbt_from_json(bundle["members"]["gbt"]),
            mlp=_mlp_from_json(bundle["members"]["mlp"]),
            tree_encoder=make_encoder(model_task, "tree", schema),
            neural_encoder=make_encoder(model_task, "neural", schema),
            fitness={k: FitnessRecord(**v)
                     for k, v in bundle["ensemble"]["fitness"].items()},
            chosen=bundle["ensemble"]["chosen"],
            seed=int(bundle["metadata"]["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFileError(f"malformed model file: {exc}") from None
    return ens


def load_model(path, schema: FeatureSchema) -> EnsembleModel:
    return restore_ensemble(load_bundle(path), schema)
