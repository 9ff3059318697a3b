"""Stateless HTTP prediction/explanation service over immutable model snapshots.

Each task's model loads once at startup; requests never mutate shared
state. Records travel as JSON objects keyed by the CSV column names
(W_mm, r_pct, ...). Validation failures return 400 with per-field
messages identical to the library's record validation.
"""

from __future__ import annotations

import uuid
from typing import Any, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .codal import (
    PROFILES,
    as3600_fire_resistance,
    as3600_params_from_record,
    ec2_fire_resistance,
    ec2_params_from_record,
)
from .dataset import (
    CSV_HEADER,
    ColumnRecord,
    FeatureSchema,
    Task,
    validate_record,
)
from .dataset import _parse_row  # shared parsing conventions with the CSV lane
from .ensemble import EnsembleModel, ensemble_model_fn, predict_batch
from .errors import MappingFailureError, OutOfValidityRangeError, PyrocolError
from .explain import cap_background, shapley_exact, shapley_sampled

DEFAULT_BATCH_LIMIT = 10_000
EXACT_FEATURE_LIMIT = 10  # larger tasks fall back to seeded permutation sampling


def record_from_payload(obj: dict[str, Any], fallback_id: str) -> ColumnRecord:
    """Build a record from a JSON object using the CSV parsing conventions."""
    cells = {}
    for col in CSV_HEADER:
        value = obj.get(col)
        if value is None:
            cells[col] = ""
        elif isinstance(value, bool):
            cells[col] = "1" if value else "0"
        else:
            cells[col] = str(value)
    if not cells["id"]:
        cells["id"] = fallback_id
    if not cells["provenance"]:
        cells["provenance"] = "real"
    return _parse_row(cells, rownum=0)


def _validation_failure(fields: dict[str, str]) -> JSONResponse:
    return JSONResponse(status_code=400, content={"error": "validation", "fields": fields})


def _parse_records(payload: dict, limit: int):
    """Returns (records, targets_allowed_missing) or a JSONResponse error."""
    if "record" in payload:
        raw = [payload["record"]]
    elif "records" in payload:
        raw = payload["records"]
        if not isinstance(raw, list):
            return _validation_failure({"records": "must be a list"})
    else:
        return _validation_failure({"record": "missing 'record' or 'records'"})
    if len(raw) > limit:
        return JSONResponse(status_code=413, content={
            "error": "batch_too_large", "limit": limit, "got": len(raw)})
    records = []
    for i, obj in enumerate(raw):
        if not isinstance(obj, dict):
            return _validation_failure({f"records[{i}]": "must be an object"})
        try:
            rec = record_from_payload(obj, fallback_id=f"req-{i}")
        except PyrocolError as exc:
            field = getattr(exc, "col", f"records[{i}]")
            return _validation_failure({field: str(exc)})
        problems = [v for v in validate_record(rec) if not v.warning and v.field != "targets"]
        if problems:
            return _validation_failure({v.field: v.message for v in problems})
        records.append(rec)
    return records


def _schema_payload(schema: FeatureSchema) -> dict:
    features = []
    for spec in schema.features:
        entry = {
            "name": spec.name,
            "unit": spec.unit,
            "kind": spec.kind,
            "min": spec.lo,
            "max": spec.hi,
            "spalling": spec.spalling,
            "fire_resistance": spec.fire_resistance,
        }
        if spec.categories:
            entry["categories"] = list(spec.categories)
        if spec.spalling:
            entry["spalling_range"] = list(schema.range_for(spec.name, Task.SPALLING))
        features.append(entry)
    return {"csv_header": CSV_HEADER, "features": features}


def create_app(models: dict[str, EnsembleModel],
               fingerprints: Optional[dict[str, str]] = None,
               batch_limit: int = DEFAULT_BATCH_LIMIT,
               background_records: Optional[list[ColumnRecord]] = None,
               explain_seed: int = 0) -> FastAPI:
    """models maps task name ("spalling", "fire_resistance") to a loaded ensemble;
    background_records anchor the explanation expectations (capped, seeded)."""
    app = FastAPI(title="pyrocol", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])
    fingerprints = fingerprints or {}
    schema = next(iter(models.values())).tree_encoder.schema
    backgrounds: dict[str, np.ndarray] = {}
    if background_records:
        for name, ens in models.items():
            usable = [r for r in background_records
                      if all(r.feature(f) is not None
                             for f in ens.tree_encoder.task.features)]
            if usable:
                backgrounds[name] = cap_background(
                    ens.tree_encoder.encode_matrix(usable), seed=explain_seed)

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception):
        incident = uuid.uuid4().hex
        return JSONResponse(status_code=500,
                            content={"error": "internal", "incident": incident})

    @app.get("/v1/schema")
    async def get_schema():
        return _schema_payload(schema)

    @app.get("/v1/model")
    async def get_model():
        out = {}
        for name, ens in models.items():
            out[name] = {
                "task": ens.task.value,
                "policy": ens.policy.value,
                "chosen": ens.chosen,
                "fitness": {k: {"metric": v.metric, "train": v.train,
                                "validation": v.validation}
                            for k, v in ens.fitness.items()},
                "fingerprint": fingerprints.get(name, ""),
            }
        return {"models": out}

    @app.post("/v1/predict")
    async def post_predict(payload: dict):
        parsed = _parse_records(payload, batch_limit)
        if isinstance(parsed, JSONResponse):
            return parsed
        results = [{"id": rec.id} for rec in parsed]
        for name, ens in models.items():
            try:
                preds = predict_batch(ens, parsed, validate=False)
            except PyrocolError as exc:
                return _validation_failure({"records": str(exc)})
            for out, pred in zip(results, preds):
                if ens.task is Task.SPALLING:
                    out["sp_probability"] = pred.sp_probability
                    out["sp_label"] = pred.sp_label
                else:
                    out["fr_minutes"] = pred.fr_minutes
                    out["rating_class"] = pred.rating.value
                out.setdefault("per_member", {})[name] = pred.per_member
        return {"model_fingerprint": fingerprints, "results": results}

    @app.post("/v1/explain")
    async def post_explain(payload: dict):
        parsed = _parse_records({"record": payload.get("record", {})}, batch_limit)
        if isinstance(parsed, JSONResponse):
            return parsed
        rec = parsed[0]
        task_name = payload.get("task") or next(iter(models))
        if task_name not in models:
            return _validation_failure({"task": f"no model loaded for {task_name!r}"})
        ens = models[task_name]
        try:
            x = ens.tree_encoder.encode(rec)
        except PyrocolError as exc:
            return _validation_failure({"record": str(exc)})
        bg = backgrounds.get(task_name)
        if bg is None:
            return JSONResponse(status_code=500, content={
                "error": "internal", "incident": "no-background-configured"})
        fn = ensemble_model_fn(ens)
        names = list(ens.tree_encoder.columns)
        mode = payload.get("mode")
        if mode is None:
            mode = "exact" if len(names) <= EXACT_FEATURE_LIMIT else "sampled"
        if mode == "exact":
            exp = shapley_exact(fn, x, bg, feature_names=names)
            meta = {"mode": "exact", "background_rows": int(len(bg))}
        else:
            n_perm = int(payload.get("n_permutations", 128))
            exp = shapley_sampled(fn, x, bg, n_permutations=n_perm,
                                  seed=explain_seed, feature_names=names)
            meta = {"mode": "sampled", "n_permutations": n_perm,
                    "seed": explain_seed, "background_rows": int(len(bg))}
        return {
            "model_fingerprint": fingerprints.get(task_name, ""),
            "task": task_name,
            "baseline": exp.baseline,
            "contributions": exp.contributions,
            "prediction": exp.prediction,
            **meta,
        }

    @app.post("/v1/codal")
    async def post_codal(payload: dict):
        parsed = _parse_records({"record": payload.get("record", {})}, batch_limit)
        if isinstance(parsed, JSONResponse):
            return parsed
        rec = parsed[0]
        profile_name = payload.get("profile", "printed")
        if profile_name not in PROFILES:
            return _validation_failure({"profile": f"unknown profile {profile_name!r}"})
        mu_fi = payload.get("mu_fi")
        out: dict[str, Any] = {"profile": profile_name,
                               "model_fingerprint": fingerprints}
        try:
            params = ec2_params_from_record(rec, mu_fi=mu_fi)
            out["ec2_minutes"] = ec2_fire_resistance(params)
            out["ec2_flags"] = {"defaulted_mu": params.defaulted_mu,
                                "clamped_length": params.clamped_length}
        except (MappingFailureError, OutOfValidityRangeError) as exc:
            out["ec2_minutes"] = None
            out["ec2_error"] = str(exc)
        try:
            out["as3600_minutes"] = as3600_fire_resistance(
                as3600_params_from_record(rec, PROFILES[profile_name]))
        except (MappingFailureError, PyrocolError) as exc:
            out["as3600_minutes"] = None
            out["as3600_error"] = str(exc)
        return out

    return app
