"""Model-agnostic Shapley attribution and feature association / correlation.

Shapley values use interventional background expectations: the value of a
coalition S is the model's mean output over background rows with the
features in S pinned to the explained instance. Exact enumeration covers
all 2^F coalitions (F <= 13); a seeded permutation-sampling mode trades
exactness for speed on batch jobs. Both modes keep the efficiency identity
baseline + sum(contributions) = prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    EmptyBackgroundError,
    EmptyInputError,
    InsufficientDataError,
    TooManyFeaturesError,
    ZeroVarianceError,
)

MAX_EXACT_FEATURES = 13
DEFAULT_BACKGROUND_CAP = 64


@dataclass(frozen=True)
class Explanation:
    baseline: float
    contributions: dict[str, float]
    prediction: float

    def total(self) -> float:
        return self.baseline + sum(self.contributions.values())


@dataclass(frozen=True)
class ImportanceReport:
    features: tuple[str, ...]
    mean_abs: tuple[float, ...]
    scores: tuple[float, ...]  # rescaled so the top feature is 100
    method: str = "exact"

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.features, self.scores))


def _eval_batch(model_fn: Callable, X: np.ndarray) -> np.ndarray:
    """Call model_fn on a matrix; fall back to a row loop for scalar-only functions."""
    try:
        out = np.asarray(model_fn(X), dtype=float)
        if out.shape == (len(X),):
            return out
    except Exception:
        pass
    return np.array([float(model_fn(row)) for row in X], dtype=float)


def cap_background(background: np.ndarray, cap: int = DEFAULT_BACKGROUND_CAP,
                   seed: int = 0) -> np.ndarray:
    """Seeded row subsample bounding the cost of coalition expectations."""
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if len(background) <= cap:
        return background
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(background), size=cap, replace=False))
    return background[keep]


def _coalition_values(model_fn, x, background, feat_idx) -> np.ndarray:
    """v(S) for every coalition bitmask over feat_idx."""
    n_feat = len(feat_idx)
    n_bg = len(background)
    values = np.empty(1 << n_feat)
    for mask in range(1 << n_feat):
        comp = background.copy()
        for i in range(n_feat):
            if (mask >> i) & 1:
                comp[:, feat_idx[i]] = x[feat_idx[i]]
        values[mask] = float(np.mean(_eval_batch(model_fn, comp)))
    return values


def shapley_exact(model_fn: Callable, x, background,
                  features: Optional[Sequence[int]] = None,
                  feature_names: Optional[Sequence[str]] = None) -> Explanation:
    """Exact Shapley attribution of model_fn(x) over the listed feature indices.

    phi_i = sum over S not containing i of |S|!(F-|S|-1)!/F! * (v(S+i) - v(S)),
    with v(S) the background-interventional expectation. Features outside the
    list always take background values.
    """
    x = np.asarray(x, dtype=float).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if len(background) == 0:
        raise EmptyBackgroundError("background must be non-empty")
    feat_idx = list(range(len(x))) if features is None else list(features)
    n_feat = len(feat_idx)
    if n_feat > MAX_EXACT_FEATURES:
        raise TooManyFeaturesError(
            f"{n_feat} features exceed the exact enumeration bound {MAX_EXACT_FEATURES}")
    names = list(feature_names) if feature_names else [f"x{i}" for i in feat_idx]

    v = _coalition_values(model_fn, x, background, feat_idx)
    fact = [math.factorial(k) for k in range(n_feat + 1)]
    weights = [fact[s] * fact[n_feat - s - 1] / fact[n_feat] for s in range(n_feat)]
    sizes = np.array([bin(mask).count("1") for mask in range(1 << n_feat)])

    phi = np.zeros(n_feat)
    for i in range(n_feat):
        bit = 1 << i
        without = np.array([m for m in range(1 << n_feat) if not m & bit])
        with_i = without | bit
        w = np.array([weights[s] for s in sizes[without]])
        phi[i] = float(np.sum(w * (v[with_i] - v[without])))

    return Explanation(
        baseline=float(v[0]),
        contributions={name: float(p) for name, p in zip(names, phi)},
        prediction=float(v[-1]),
    )


def shapley_sampled(model_fn: Callable, x, background, n_permutations: int = 128,
                    seed: int = 0, features: Optional[Sequence[int]] = None,
                    feature_names: Optional[Sequence[str]] = None) -> Explanation:
    """Permutation-sampling estimate; telescoping keeps the efficiency identity."""
    x = np.asarray(x, dtype=float).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if len(background) == 0:
        raise EmptyBackgroundError("background must be non-empty")
    feat_idx = list(range(len(x))) if features is None else list(features)
    n_feat = len(feat_idx)
    names = list(feature_names) if feature_names else [f"x{i}" for i in feat_idx]
    rng = np.random.default_rng(seed)

    baseline = float(np.mean(_eval_batch(model_fn, background)))
    phi = np.zeros(n_feat)
    cache: dict[frozenset, float] = {frozenset(): baseline}

    def value(subset: frozenset) -> float:
        if subset not in cache:
            comp = background.copy()
            for pos in subset:
                comp[:, feat_idx[pos]] = x[feat_idx[pos]]
            cache[subset] = float(np.mean(_eval_batch(model_fn, comp)))
        return cache[subset]

    for _ in range(n_permutations):
        perm = rng.permutation(n_feat)
        members: set[int] = set()
        prev = baseline
        for pos in perm:
            members.add(int(pos))
            cur = value(frozenset(members))
            phi[pos] += cur - prev
            prev = cur
    phi /= n_permutations
    return Explanation(
        baseline=baseline,
        contributions={name: float(p) for name, p in zip(names, phi)},
        prediction=float(value(frozenset(range(n_feat)))),
    )


def importance(model_fn: Callable, eval_set, background,
               feature_names: Optional[Sequence[str]] = None,
               method: str = "exact", n_permutations: int = 64,
               seed: int = 0) -> ImportanceReport:
    """Mean |phi| per feature over an evaluation set, top feature rescaled to 100%."""
    eval_set = np.atleast_2d(np.asarray(eval_set, dtype=float))
    if len(eval_set) == 0:
        raise EmptyInputError("evaluation set must be non-empty")
    n_feat = eval_set.shape[1]
    names = list(feature_names) if feature_names else [f"x{i}" for i in range(n_feat)]

    totals = np.zeros(n_feat)
    for row_i, row in enumerate(eval_set):
        if method == "exact":
            exp = shapley_exact(model_fn, row, background, feature_names=names)
        else:
            exp = shapley_sampled(model_fn, row, background, n_permutations,
                                  seed=seed + row_i, feature_names=names)
        totals += np.abs([exp.contributions[name] for name in names])
    mean_abs = totals / len(eval_set)
    top = mean_abs.max()
    scores = mean_abs / top * 100.0 if top > 0 else np.zeros(n_feat)
    return ImportanceReport(tuple(names), tuple(map(float, mean_abs)),
                            tuple(map(float, scores)), method)


# --- association (normalized mutual information) ------------------------------


def equal_frequency_bins(x: np.ndarray, bins: int) -> np.ndarray:
    """Discretize by quantile edges; duplicate edges collapse into shared bins."""
    edges = np.quantile(x, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.searchsorted(edges, x, side="right")


def _entropy(codes: np.ndarray) -> float:
    _, counts = np.unique(codes, return_counts=True)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log(p)))


def _mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    joint = np.zeros((len(ua), len(ub)))
    np.add.at(joint, (ia, ib), 1.0)
    joint /= joint.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])))


def nmi(a: np.ndarray, b: np.ndarray) -> float:
    """I(a;b) / sqrt(H(a) H(b)) on already-discretized codes; 0 when either is constant."""
    ha, hb = _entropy(a), _entropy(b)
    if ha <= 0.0 or hb <= 0.0:
        return 0.0
    return min(1.0, _mutual_information(a, b) / math.sqrt(ha * hb))


@dataclass(frozen=True)
class MatrixReport:
    variables: tuple[str, ...]
    matrix: np.ndarray
    estimator: str
    bands: Optional[list[list[str]]] = None


def _strength_band(rho: float) -> str:
    a = abs(rho)
    if a >= 0.5:
        return "strong"
    if a >= 0.3:
        return "moderate"
    if a >= 0.1:
        return "weak"
    return "none"


def association_matrix(columns: dict[str, np.ndarray], bins: int = 10,
                       categorical: Sequence[str] = ()) -> MatrixReport:
    """Pairwise normalized mutual information with equal-frequency binning.

    Continuous variables are discretized once into `bins` quantile bins;
    categorical variables keep their codes. Needs at least 2*bins rows.
    """
    names = list(columns)
    n = len(next(iter(columns.values())))
    if n < 2 * bins:
        raise InsufficientDataError(f"need >= {2 * bins} records, got {n}")
    codes = {}
    for name in names:
        arr = np.asarray(columns[name], dtype=float)
        codes[name] = arr.astype(np.int64) if name in categorical \
            else equal_frequency_bins(arr, bins)
    size = len(names)
    out = np.eye(size)
    for i in range(size):
        for j in range(i + 1, size):
            out[i, j] = out[j, i] = nmi(codes[names[i]], codes[names[j]])
    return MatrixReport(tuple(names), out, f"nmi(equal-frequency bins={bins})")


def _task_columns(ds, task) -> tuple[dict[str, np.ndarray], list[str]]:
    from .dataset import RESTRAINT_CODES, Task, exposure_code

    sub = ds.for_task(task)
    if len(sub) == 0:
        raise EmptyInputError(f"no records carry the {task.value} target")
    columns: dict[str, np.ndarray] = {}
    categorical: list[str] = []
    for name in task.features:
        values = []
        for rec in sub.records:
            raw = rec.feature(name)
            if name == "K":
                values.append(float(RESTRAINT_CODES[raw]))
            elif name == "E":
                values.append(float(exposure_code(raw)))
            else:
                values.append(float(raw))
        columns[name] = np.asarray(values)
        if name in ("K", "E", "S"):
            categorical.append(name)
    target = task.target
    columns[target] = np.asarray(
        [float(rec.SP) if task is Task.SPALLING else float(rec.FR)
         for rec in sub.records])
    if task is Task.SPALLING:
        categorical.append(target)
    return columns, categorical


def association_for_task(ds, task, bins: int = 10) -> MatrixReport:
    """Task features plus target as one normalized-mutual-information matrix."""
    columns, categorical = _task_columns(ds, task)
    return association_matrix(columns, bins=bins, categorical=categorical)


def correlation_for_task(ds, task) -> MatrixReport:
    """Task features plus target as one Pearson correlation matrix."""
    columns, _ = _task_columns(ds, task)
    return correlation_matrix(columns)


def write_matrix_csv(report: MatrixReport, path) -> None:
    """CSV with the estimator recorded on the first row, then a labelled matrix."""
    import csv as _csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["estimator", report.estimator])
        writer.writerow([""] + list(report.variables))
        for i, name in enumerate(report.variables):
            writer.writerow([name] + [repr(float(v)) for v in report.matrix[i]])


def correlation_matrix(columns: dict[str, np.ndarray]) -> MatrixReport:
    """Pairwise Pearson coefficients with strength band labels."""
    names = list(columns)
    arrays = {}
    for name in names:
        arr = np.asarray(columns[name], dtype=float)
        if len(arr) < 2:
            raise InsufficientDataError("need >= 2 records")
        if float(np.var(arr)) == 0.0:
            raise ZeroVarianceError(name)
        arrays[name] = arr - arr.mean()
    size = len(names)
    out = np.eye(size)
    for i in range(size):
        for j in range(i + 1, size):
            a, b = arrays[names[i]], arrays[names[j]]
            out[i, j] = out[j, i] = float(
                np.sum(a * b) / math.sqrt(np.sum(a * a) * np.sum(b * b)))
    bands = [[_strength_band(out[i, j]) for j in range(size)] for i in range(size)]
    return MatrixReport(tuple(names), out, "pearson", bands)
