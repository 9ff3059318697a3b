"""Synthetic observation generation: pair averaging and SMOTE-style interpolation.

Real columns with similar features are clustered in pairs under z-score
normalized Euclidean distance; each pair yields one synthetic column with
the parents' averaged continuous features. Labels propagate conservatively:
the synthetic column spalls if either parent spalled. Classic line
interpolation with a random factor u in [0, 1] is provided alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import (
    ColumnRecord,
    Dataset,
    Provenance,
    Task,
    load_csv,
)
from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    InsufficientDataError,
    MissingLabelError,
    UOutOfRangeError,
    WrongProvenanceError,
)

CONTINUOUS_FIELDS = ["W", "r", "L", "fc", "fy", "C", "ex", "ey", "P"]
CATEGORICAL_FIELDS = ["K", "E", "S"]


@dataclass(frozen=True)
class PairPlan:
    pairs: tuple[tuple[str, str], ...]
    distance_metric: str = "zscore_euclidean"
    max_synthetic: int = 0

    def __post_init__(self):
        seen = set()
        for a, b in self.pairs:
            if a == b:
                raise ValueError(f"pair ({a!r}, {b!r}) repeats one record")
            key = frozenset((a, b))
            if key in seen:
                raise ValueError(f"duplicate unordered pair ({a!r}, {b!r})")
            seen.add(key)


def smote_interpolate(a, b, u: float) -> np.ndarray:
    """Point on the segment between two continuous feature vectors: a + u*(b - a)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    if not 0.0 <= u <= 1.0:
        raise UOutOfRangeError(f"u must be in [0, 1], got {u}")
    return a + u * (b - a)


def _feature_matrix(records: Sequence[ColumnRecord], features: Sequence[str]) -> np.ndarray:
    return np.array([[r.feature(f) for f in features] for r in records], dtype=float)


def build_pairs(ds: Dataset, target_count: int, seed: int = 0,
                task: Task = Task.SPALLING) -> PairPlan:
    """Round-based greedy nearest-neighbor matching over Real records.

    Within a round every record joins at most one new pair, pairs taken in
    ascending z-score Euclidean distance, so no record repeats before all
    have appeared; rounds continue until target_count distinct pairs exist.
    Equal distances break on the smaller id pair. Fully deterministic; the
    seed is accepted for interface symmetry with sampled generators.
    """
    del seed  # pairing is distance-ordered and needs no randomness
    pool = [r for r in ds.records
            if r.provenance is Provenance.REAL and r.has_target(task)]
    if len(pool) < 2:
        raise InsufficientDataError("need >= 2 real records with the task target")
    feats = [f for f in task.features if f in CONTINUOUS_FIELDS]
    X = _feature_matrix(pool, feats)
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    sigma[sigma == 0] = 1.0
    Z = (X - mu) / sigma

    ids = [r.id for r in pool]
    order = np.argsort(ids)
    candidates = []
    for ii in range(len(pool)):
        for jj in range(ii + 1, len(pool)):
            i, j = int(order[ii]), int(order[jj])
            d = float(np.linalg.norm(Z[i] - Z[j]))
            a, b = sorted((ids[i], ids[j]))
            candidates.append((d, a, b))
    candidates.sort()

    pairs: list[tuple[str, str]] = []
    emitted: set[frozenset] = set()
    while len(pairs) < target_count:
        available = set(ids)
        advanced = False
        for d, a, b in candidates:
            if len(pairs) >= target_count:
                break
            key = frozenset((a, b))
            if key in emitted or a not in available or b not in available:
                continue
            pairs.append((a, b))
            emitted.add(key)
            available.discard(a)
            available.discard(b)
            advanced = True
        if not advanced:
            break
    return PairPlan(tuple(pairs), "zscore_euclidean", target_count)


def _average_optional(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None or b is None:
        return None
    return (a + b) / 2.0


@dataclass
class SynthesisReport:
    records: list[ColumnRecord]
    categorical_disagreements: dict[str, list[str]] = field(default_factory=dict)


def synthesize_pairs_report(ds: Dataset, plan: PairPlan,
                            require_spalling: bool = True) -> SynthesisReport:
    """pair_synthesize plus metadata naming pairs whose categoricals disagreed."""
    report = SynthesisReport([])
    for id_a, id_b in plan.pairs:
        pa, pb = ds.by_id(id_a), ds.by_id(id_b)
        if require_spalling and (pa.SP is None or pb.SP is None):
            raise MissingLabelError(
                f"pair ({id_a!r}, {id_b!r}) lacks the spalling label on both parents")
        first, second = sorted((pa, pb), key=lambda r: r.id)
        disagreements = [f for f in CATEGORICAL_FIELDS
                         if first.feature(f) != second.feature(f)]
        new_id = f"syn:{first.id}+{second.id}"
        sp = None
        if pa.SP is not None and pb.SP is not None:
            sp = pa.SP or pb.SP  # worst case when parents disagree
        fr = _average_optional(pa.FR, pb.FR) if not require_spalling else None
        rec = ColumnRecord(
            id=new_id,
            provenance=Provenance.SYNTHETIC,
            W=(pa.W + pb.W) / 2.0,
            r=(pa.r + pb.r) / 2.0,
            fc=(pa.fc + pb.fc) / 2.0,
            C=(pa.C + pb.C) / 2.0,
            ex=(pa.ex + pb.ex) / 2.0,
            ey=(pa.ey + pb.ey) / 2.0,
            P=(pa.P + pb.P) / 2.0,
            K=first.K,
            E=first.E,
            S=first.S,
            L=_average_optional(pa.L, pb.L),
            fy=_average_optional(pa.fy, pb.fy),
            FR=fr,
            SP=sp,
        )
        report.records.append(rec)
        if disagreements:
            report.categorical_disagreements[new_id] = disagreements
    return report


def pair_synthesize(ds: Dataset, plan: PairPlan,
                    require_spalling: bool = True) -> list[ColumnRecord]:
    """One synthetic record per pair: averaged continuous features, categoricals
    by agreement (else from the lexicographically-first parent), spalling label
    as the OR of the parents. Restricted to spalling-labelled parents unless
    require_spalling is lifted for experimentation."""
    return synthesize_pairs_report(ds, plan, require_spalling).records


def ingest_augmented(ds: Dataset, path) -> Dataset:
    """Append an augmented-observations CSV; every row must carry provenance=augmented."""
    extra = load_csv(path, ds.schema)
    for rec in extra.records:
        if rec.provenance is not Provenance.AUGMENTED:
            raise WrongProvenanceError(
                f"record {rec.id!r} has provenance {rec.provenance.value!r}; "
                "augmented channel accepts only provenance=augmented")
    existing = {r.id for r in ds.records}
    for rec in extra.records:
        if rec.id in existing:
            raise DuplicateIdError(f"augmented id {rec.id!r} already present")
    return Dataset(ds.records + extra.records, ds.schema, None, ds.seed)
