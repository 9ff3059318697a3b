"""Column-record schema, CSV ingestion, statistics, splitting and encoding.

The unit of observation is one reinforced-concrete column with up to two
targets: fire resistance in minutes (FR) and fire-induced spalling (SP).
Two tasks share the schema but consume different feature subsets:

* spalling        -> {W, r, fc, C, P}
* fire_resistance -> all 12 features

Plausible ranges come from the published statistics of the compiled fire
test database; values outside them are warnings in strict validation,
never hard errors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    BadNumericError,
    DuplicateIdError,
    InsufficientDataError,
    MissingFeatureError,
    MissingHeaderError,
    MissingTargetError,
    UnknownEnumError,
)

CSV_HEADER = [
    "id", "provenance", "W_mm", "r_pct", "L_m", "fc_MPa", "fy_MPa", "K",
    "C_mm", "ex_mm", "ey_mm", "P_kN", "E", "S", "FR_min", "SP",
]

FEATURE_NAMES = ["W", "r", "L", "fc", "fy", "K", "C", "ex", "ey", "P", "E", "S"]
SPALLING_FEATURES = ["W", "r", "fc", "C", "P"]
FIRE_FEATURES = list(FEATURE_NAMES)

CANONICAL_EXPOSURES = ["ASTM_E119", "ISO834", "HC", "DESIGN"]
OTHER_EXPOSURE_CODE = len(CANONICAL_EXPOSURES)  # every OTHER:<label> shares one code


class Provenance(str, Enum):
    REAL = "real"
    SYNTHETIC = "synthetic"
    AUGMENTED = "augmented"


class Restraint(str, Enum):
    FF = "FF"
    FP = "FP"
    PP = "PP"


class Task(str, Enum):
    SPALLING = "spalling"
    FIRE_RESISTANCE = "fire_resistance"
    RATING_CLASS = "rating_class"

    @property
    def features(self) -> list[str]:
        return SPALLING_FEATURES if self is Task.SPALLING else FIRE_FEATURES

    @property
    def target(self) -> str:
        return "SP" if self is Task.SPALLING else "FR"


class SplitLabel(str, Enum):
    TRAIN = "train"
    TEST = "test"


RESTRAINT_CODES = {Restraint.FF: 0, Restraint.FP: 1, Restraint.PP: 2}


def exposure_code(e: str) -> int:
    return CANONICAL_EXPOSURES.index(e) if e in CANONICAL_EXPOSURES else OTHER_EXPOSURE_CODE


def is_valid_exposure(e: str) -> bool:
    return e in CANONICAL_EXPOSURES or (e.startswith("OTHER:") and len(e) > len("OTHER:"))


@dataclass(frozen=True)
class ColumnRecord:
    """One RC column observation. Units: W, C, ex, ey in mm; L in m; fc, fy in MPa; P in kN."""

    id: str
    provenance: Provenance
    W: float
    r: float
    fc: float
    C: float
    ex: float
    ey: float
    P: float
    K: Restraint
    E: str
    S: int
    L: Optional[float] = None
    fy: Optional[float] = None
    FR: Optional[float] = None
    SP: Optional[bool] = None

    def feature(self, name: str):
        return getattr(self, name)

    def has_target(self, task: Task) -> bool:
        if task is Task.SPALLING:
            return self.SP is not None
        return self.FR is not None


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    unit: str
    kind: str  # "continuous" or "categorical"
    lo: float
    hi: float
    spalling: bool
    fire_resistance: bool
    categories: tuple[str, ...] = ()


def _spec(name, unit, kind, lo, hi, sp, fr, cats=()):
    return FeatureSpec(name, unit, kind, lo, hi, sp, fr, tuple(cats))


# Plausible ranges are the union of the published per-provenance rows for
# each analysis partition, so any record from the compiled database is
# warning-free for its own task.
_FIRE_RANGES = {
    "W": (200.0, 914.0), "r": (0.9, 4.4), "L": (2.1, 5.8), "fc": (24.0, 138.0),
    "fy": (354.0, 591.0), "C": (23.0, 64.0), "ex": (0.0, 150.0), "ey": (0.0, 75.0),
    "P": (0.0, 5373.0),
}
_SPALLING_RANGES = {
    "W": (152.0, 514.0), "r": (0.3, 11.7), "fc": (15.0, 126.5), "C": (13.0, 64.0),
    "P": (0.0, 5373.0),
}
_UNITS = {
    "W": "mm", "r": "%", "L": "m", "fc": "MPa", "fy": "MPa", "C": "mm",
    "ex": "mm", "ey": "mm", "P": "kN", "K": "", "E": "", "S": "faces",
}


@dataclass(frozen=True)
class FeatureSchema:
    """Declares every model-visible feature with unit, kind, range and task flags."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(names) != len(set(names)):
            raise ValueError("duplicate feature in schema")

    def get(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def for_task(self, task: Task) -> list[FeatureSpec]:
        if task is Task.SPALLING:
            return [f for f in self.features if f.spalling]
        return [f for f in self.features if f.fire_resistance]

    def range_for(self, name: str, task: Task) -> tuple[float, float]:
        if task is Task.SPALLING and name in _SPALLING_RANGES:
            return _SPALLING_RANGES[name]
        return (self.get(name).lo, self.get(name).hi)


def default_schema() -> FeatureSchema:
    """Schema covering both tasks; continuous ranges from the fire-resistance partition."""
    feats = []
    for name in FEATURE_NAMES:
        if name == "K":
            feats.append(_spec("K", "", "categorical", 0, 2, False, True,
                               [r.value for r in Restraint]))
        elif name == "E":
            feats.append(_spec("E", "", "categorical", 0, OTHER_EXPOSURE_CODE, False, True,
                               CANONICAL_EXPOSURES + ["OTHER"]))
        elif name == "S":
            feats.append(_spec("S", "faces", "continuous", 1, 4, False, True))
        else:
            lo, hi = _FIRE_RANGES[name]
            feats.append(_spec(name, _UNITS[name], "continuous", lo, hi,
                               name in _SPALLING_RANGES, True))
    return FeatureSchema(tuple(feats))


DEFAULT_SCHEMA = default_schema()


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered collection of records plus schema and optional split."""

    records: tuple[ColumnRecord, ...]
    schema: FeatureSchema = DEFAULT_SCHEMA
    split: Optional[dict[str, SplitLabel]] = None
    seed: int = 0

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(ids) != len(set(ids)):
            raise DuplicateIdError("record ids must be unique")
        if self.split is not None and set(self.split) != set(ids):
            raise ValueError("split must cover exactly the dataset ids")

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self, rid: str) -> ColumnRecord:
        for r in self.records:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def for_task(self, task: Task) -> "Dataset":
        """Records carrying the task's target and its required features."""
        keep = tuple(
            r for r in self.records
            if r.has_target(task) and not missing_features(r, task)
        )
        return Dataset(keep, self.schema, None, self.seed)

    def subset(self, label: SplitLabel) -> "Dataset":
        if self.split is None:
            raise ValueError("dataset has no split")
        keep = tuple(r for r in self.records if self.split[r.id] is label)
        return Dataset(keep, self.schema, None, self.seed)

    def provenance_counts(self) -> dict[str, int]:
        out = {p.value: 0 for p in Provenance}
        for r in self.records:
            out[r.provenance.value] += 1
        return out


@dataclass(frozen=True)
class StatsRow:
    feature: str
    group: str
    n: int
    minimum: float
    maximum: float
    mean: float
    std: float
    skewness: float
    degenerate: bool = False


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    warning: bool = False

    def __str__(self):
        tag = "warning" if self.warning else "violation"
        return f"{self.field}: {self.message} ({tag})"


def missing_features(rec: ColumnRecord, task: Task) -> list[str]:
    return [name for name in task.features if rec.feature(name) is None]


def validate_record(rec: ColumnRecord, schema: FeatureSchema = DEFAULT_SCHEMA,
                    strict: bool = False) -> list[Violation]:
    """Check hard invariants; in strict mode also flag out-of-range values as warnings."""
    out: list[Violation] = []

    def bad(fieldname, msg):
        out.append(Violation(fieldname, msg))

    if not rec.id:
        bad("id", "must be non-empty")
    if not isinstance(rec.provenance, Provenance):
        bad("provenance", "must be real, synthetic or augmented")
    for name, value in [("W", rec.W), ("r", rec.r), ("fc", rec.fc)]:
        if value is None or not math.isfinite(value) or value <= 0:
            bad(name, "must be a positive finite number")
    for name, value in [("C", rec.C), ("ex", rec.ex), ("ey", rec.ey), ("P", rec.P)]:
        if value is None or not math.isfinite(value) or value < 0:
            bad(name, "must be a non-negative finite number")
    if rec.L is not None and (not math.isfinite(rec.L) or rec.L <= 0):
        bad("L", "must be positive when present")
    if rec.fy is not None and (not math.isfinite(rec.fy) or rec.fy <= 0):
        bad("fy", "must be positive when present")
    if not isinstance(rec.K, Restraint):
        bad("K", "must be FF, FP or PP")
    if not is_valid_exposure(rec.E):
        bad("E", "must be a known exposure or OTHER:<label>")
    if rec.S not in (1, 2, 3, 4):
        bad("S", "exposed faces must be 1, 2, 3 or 4")
    if rec.FR is not None and (not math.isfinite(rec.FR) or rec.FR < 0):
        bad("FR", "must be non-negative when present")
    if rec.FR is None and rec.SP is None:
        bad("targets", "at least one of FR, SP must be present")

    if strict and not out:
        tasks = []
        if rec.SP is not None:
            tasks.append(Task.SPALLING)
        if rec.FR is not None:
            tasks.append(Task.FIRE_RESISTANCE)
        seen = set()
        for task in tasks:
            for spec in schema.for_task(task):
                if spec.kind != "continuous" or spec.name in seen:
                    continue
                value = rec.feature(spec.name)
                if value is None:
                    continue
                lo, hi = schema.range_for(spec.name, task)
                if not lo <= value <= hi:
                    seen.add(spec.name)
                    out.append(Violation(
                        spec.name,
                        f"value {value:g} outside plausible range [{lo:g}, {hi:g}]",
                        warning=True,
                    ))
    return out


# --- CSV ingestion ----------------------------------------------------------


def _parse_float(text: str, row: int, col: str) -> Optional[float]:
    text = text.strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise BadNumericError(row, col, f"cannot parse {text!r}") from None


def _parse_row(row: dict[str, str], rownum: int) -> ColumnRecord:
    prov_raw = row["provenance"].strip().lower()
    try:
        prov = Provenance(prov_raw)
    except ValueError:
        raise UnknownEnumError(rownum, "provenance", prov_raw) from None
    k_raw = row["K"].strip()
    try:
        restraint = Restraint(k_raw)
    except ValueError:
        raise UnknownEnumError(rownum, "K", k_raw) from None
    e_raw = row["E"].strip()
    if not is_valid_exposure(e_raw):
        raise UnknownEnumError(rownum, "E", e_raw)

    s_val = _parse_float(row["S"], rownum, "S")
    if s_val is None or s_val != int(s_val):
        raise BadNumericError(rownum, "S", "exposed faces must be an integer")
    sp_raw = row["SP"].strip()
    if sp_raw == "":
        sp = None
    elif sp_raw in ("0", "1"):
        sp = sp_raw == "1"
    else:
        raise UnknownEnumError(rownum, "SP", sp_raw)

    def req(col, name):
        v = _parse_float(row[col], rownum, col)
        if v is None:
            raise BadNumericError(rownum, col, f"{name} is required")
        return v

    return ColumnRecord(
        id=row["id"].strip(),
        provenance=prov,
        W=req("W_mm", "width"),
        r=req("r_pct", "reinforcement ratio"),
        L=_parse_float(row["L_m"], rownum, "L_m"),
        fc=req("fc_MPa", "compressive strength"),
        fy=_parse_float(row["fy_MPa"], rownum, "fy_MPa"),
        K=restraint,
        C=req("C_mm", "cover"),
        ex=req("ex_mm", "eccentricity x"),
        ey=req("ey_mm", "eccentricity y"),
        P=req("P_kN", "applied load"),
        E=e_raw,
        S=int(s_val),
        FR=_parse_float(row["FR_min"], rownum, "FR_min"),
        SP=sp,
    )


def load_csv(path, schema: FeatureSchema = DEFAULT_SCHEMA,
             require_target: bool = True) -> Dataset:
    """Parse a corpus CSV; any malformed or invalid row aborts with row and reason.

    require_target=False admits target-free rows (prediction inputs such as
    exported what-if scenarios); training corpora keep the default.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingHeaderError("file is empty") from None
        if header != CSV_HEADER:
            raise MissingHeaderError(
                f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}")
        records: list[ColumnRecord] = []
        seen: set[str] = set()
        for rownum, cells in enumerate(reader, start=2):
            if not cells or all(c.strip() == "" for c in cells):
                continue
            if len(cells) != len(CSV_HEADER):
                raise BadNumericError(rownum, "*", f"expected {len(CSV_HEADER)} cells")
            rec = _parse_row(dict(zip(CSV_HEADER, cells)), rownum)
            if rec.id in seen:
                raise DuplicateIdError(f"row {rownum}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            violations = [v for v in validate_record(rec, schema) if not v.warning
                          and (require_target or v.field != "targets")]
            if violations:
                raise BadNumericError(rownum, violations[0].field, violations[0].message)
            records.append(rec)
    return Dataset(tuple(records), schema)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value) if isinstance(value, float) else str(value)


def write_csv(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in ds.records:
            writer.writerow([
                r.id, r.provenance.value, _fmt(r.W), _fmt(r.r), _fmt(r.L),
                _fmt(r.fc), _fmt(r.fy), r.K.value, _fmt(r.C), _fmt(r.ex),
                _fmt(r.ey), _fmt(r.P), r.E, str(r.S), _fmt(r.FR),
                "" if r.SP is None else ("1" if r.SP else "0"),
            ])


# --- descriptive statistics -------------------------------------------------

STAT_FEATURES = ["W", "r", "L", "fc", "fy", "C", "ex", "ey", "P", "FR"]


def _stats_for(values: Sequence[float], feature: str, group: str) -> StatsRow:
    arr = np.asarray(values, dtype=float)
    n = len(arr)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1))
    degenerate = std == 0.0 or n < 3
    if degenerate:
        skew = 0.0
    else:
        z = (arr - mean) / std
        skew = float(n / ((n - 1) * (n - 2)) * np.sum(z ** 3))
    return StatsRow(feature, group, n, float(arr.min()), float(arr.max()),
                    mean, std, skew, degenerate)


def summarize(ds: Dataset, group_by_provenance: bool = False) -> list[StatsRow]:
    """Min/max/mean/sample-std/adjusted-skewness per feature, optionally per provenance.

    Skewness is the adjusted sample (spreadsheet-style) statistic
    n/((n-1)(n-2)) * sum(((x-mean)/s)^3); degenerate groups (constant values
    or n < 3) report 0 with the degenerate flag set.
    """
    groups: list[tuple[str, list[ColumnRecord]]] = []
    if group_by_provenance:
        for prov in Provenance:
            recs = [r for r in ds.records if r.provenance is prov]
            if recs:
                groups.append((prov.value, recs))
    else:
        groups.append(("all", list(ds.records)))

    out: list[StatsRow] = []
    for group, recs in groups:
        for feature in STAT_FEATURES:
            values = [r.feature(feature) for r in recs if r.feature(feature) is not None]
            if not values:
                continue
            if len(values) < 2:
                raise InsufficientDataError(
                    f"need >= 2 values for {feature!r} in group {group!r}")
            out.append(_stats_for(values, feature, group))
    return out


# --- train/test split -------------------------------------------------------


def split_train_test(ds: Dataset, fraction: float = 0.70, seed: int = 0,
                     stratify_on: Optional[str] = None) -> Dataset:
    """Deterministic split; stratified mode keeps class counts within +-1 per class.

    The shuffle runs over ids sorted lexicographically, so the assignment
    depends only on the id set and the seed, not on record order.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(ds.records)
    if n < 2:
        raise InsufficientDataError("need at least 2 records to split")

    rng = np.random.default_rng(seed)
    assignment: dict[str, SplitLabel] = {}

    if stratify_on is None:
        ids = sorted(r.id for r in ds.records)
        order = rng.permutation(len(ids))
        n_train = int(round(fraction * n))
        n_train = min(max(n_train, 1), n - 1)
        for pos, idx in enumerate(order):
            assignment[ids[idx]] = SplitLabel.TRAIN if pos < n_train else SplitLabel.TEST
    else:
        if stratify_on not in ("SP", "FR"):
            raise ValueError("stratify_on must be 'SP' or 'FR'")
        classes: dict[object, list[str]] = {}
        for r in ds.records:
            value = getattr(r, stratify_on)
            if value is None:
                raise MissingTargetError(
                    f"record {r.id!r} lacks {stratify_on} required for stratification")
            classes.setdefault(value, []).append(r.id)
        n_train_total = int(round(fraction * n))
        n_train_total = min(max(n_train_total, 1), n - 1)
        keys = sorted(classes, key=str)
        floors, remainders = [], []
        for key in keys:
            exact = fraction * len(classes[key])
            floors.append(int(math.floor(exact)))
            remainders.append(exact - math.floor(exact))
        short = n_train_total - sum(floors)
        bump = sorted(range(len(keys)), key=lambda i: (-remainders[i], str(keys[i])))[:max(short, 0)]
        for i, key in enumerate(keys):
            ids = sorted(classes[key])
            order = rng.permutation(len(ids))
            quota = floors[i] + (1 if i in bump else 0)
            quota = min(quota, len(ids))
            for pos, idx in enumerate(order):
                assignment[ids[idx]] = SplitLabel.TRAIN if pos < quota else SplitLabel.TEST
    return replace(ds, split=assignment, seed=seed)


# --- numeric encoding -------------------------------------------------------


@dataclass(frozen=True)
class Encoder:
    """Maps records to numeric vectors; 'tree' uses integer codes, 'neural' one-hot + min-max."""

    task: Task
    kind: str  # "tree" or "neural"
    schema: FeatureSchema
    columns: tuple[str, ...]

    def encode(self, rec: ColumnRecord) -> np.ndarray:
        missing = missing_features(rec, self.task)
        if missing:
            raise MissingFeatureError(
                f"record {rec.id!r} lacks {missing} required for task {self.task.value}")
        values = []
        for name in self.task.features:
            raw = rec.feature(name)
            if name == "K":
                code = RESTRAINT_CODES[raw]
                if self.kind == "tree":
                    values.append(float(code))
                else:
                    values.extend(1.0 if i == code else 0.0 for i in range(3))
            elif name == "E":
                code = exposure_code(raw)
                if self.kind == "tree":
                    values.append(float(code))
                else:
                    values.extend(1.0 if i == code else 0.0
                                  for i in range(OTHER_EXPOSURE_CODE + 1))
            else:
                x = float(raw)
                if self.kind == "tree":
                    values.append(x)
                else:
                    lo, hi = self.schema.range_for(name, self.task)
                    values.append((x - lo) / (hi - lo) if hi > lo else 0.0)
        return np.asarray(values, dtype=float)

    def encode_matrix(self, records: Iterable[ColumnRecord]) -> np.ndarray:
        rows = [self.encode(r) for r in records]
        if not rows:
            return np.empty((0, len(self.columns)), dtype=float)
        return np.vstack(rows)

    def decode_categorical(self, name: str, code: float):
        """Inverse of the tree integer-code mapping (categoricals only)."""
        if self.kind != "tree":
            raise ValueError("decode_categorical applies to tree encoding")
        code = int(code)
        if name == "K":
            return {v: k for k, v in RESTRAINT_CODES.items()}[code]
        if name == "E":
            return CANONICAL_EXPOSURES[code] if code < OTHER_EXPOSURE_CODE else "OTHER"
        raise KeyError(name)


def _columns_for(task: Task, kind: str) -> tuple[str, ...]:
    cols: list[str] = []
    for name in task.features:
        if kind == "neural" and name == "K":
            cols.extend(f"K={r.value}" for r in Restraint)
        elif kind == "neural" and name == "E":
            cols.extend(f"E={e}" for e in CANONICAL_EXPOSURES + ["OTHER"])
        else:
            cols.append(name)
    return tuple(cols)


def make_encoder(task: Task, kind: str, schema: FeatureSchema = DEFAULT_SCHEMA) -> Encoder:
    if kind not in ("tree", "neural"):
        raise ValueError("kind must be 'tree' or 'neural'")
    if task is Task.RATING_CLASS:
        task = Task.FIRE_RESISTANCE
    return Encoder(task, kind, schema, _columns_for(task, kind))


def encode(rec: ColumnRecord, task: Task, target_model: str,
           schema: FeatureSchema = DEFAULT_SCHEMA) -> np.ndarray:
    """One-record convenience wrapper around make_encoder().encode()."""
    kind = "tree" if target_model.lower() == "tree" else "neural"
    return make_encoder(task, kind, schema).encode(rec)


def neural_from_tree(task: Task, schema: FeatureSchema, X_tree: np.ndarray) -> np.ndarray:
    """Re-express tree-encoded rows in the neural encoding (one-hot + min-max).

    The tree encoding is the raw feature vector with integer category codes,
    so this conversion lets one encoded matrix drive all three learners.
    """
    if task is Task.RATING_CLASS:
        task = Task.FIRE_RESISTANCE
    X_tree = np.atleast_2d(np.asarray(X_tree, dtype=float))
    cols: list[np.ndarray] = []
    j = 0
    for name in task.features:
        x = X_tree[:, j]
        j += 1
        if name == "K":
            codes = x.astype(np.int64)
            for c in range(3):
                cols.append((codes == c).astype(float))
        elif name == "E":
            codes = x.astype(np.int64)
            for c in range(OTHER_EXPOSURE_CODE + 1):
                cols.append((codes == c).astype(float))
        else:
            lo, hi = schema.range_for(name, task)
            cols.append((x - lo) / (hi - lo) if hi > lo else np.zeros_like(x))
    return np.column_stack(cols)


def targets(ds: Dataset, task: Task) -> np.ndarray:
    out = []
    for r in ds.records:
        if not r.has_target(task):
            raise MissingTargetError(f"record {r.id!r} lacks target for {task.value}")
        out.append(float(r.SP) if task is Task.SPALLING else float(r.FR))
    return np.asarray(out, dtype=float)
