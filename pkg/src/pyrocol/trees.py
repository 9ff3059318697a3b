"""CART trees and the two tree ensembles: random forest and gradient boosting.

Trees are stored as flat parallel arrays (feature, threshold, left, right,
value, n_samples) with node 0 as the root and feature == -1 marking leaves.
Splits send x <= threshold to the left child; thresholds are midpoints
between consecutive distinct sorted values. Categorical features are
consumed as ordered integer codes from the tree encoding.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyDataError, UnfittedModelError
from .explain import Explanation

_GAIN_TOL = 1e-12


@dataclass
class Tree:
    feature: np.ndarray    # int, -1 for leaves
    threshold: np.ndarray  # float
    left: np.ndarray       # int, -1 for leaves
    right: np.ndarray      # int, -1 for leaves
    value: np.ndarray      # (n_nodes, n_outputs): class frequencies or [mean]
    n_samples: np.ndarray  # int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for every row, by vectorized level-wise descent."""
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            feat = self.feature[cur]
            go_left = X[rows, feat] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active[rows] = self.feature[node[rows]] >= 0
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def decision_path(self, x: np.ndarray) -> list[int]:
        path = [0]
        while self.feature[path[-1]] >= 0:
            node = path[-1]
            child = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
            path.append(int(child))
        return path


@dataclass(frozen=True)
class CartParams:
    criterion: str = "variance"  # "gini" or "variance"
    max_depth: Optional[int] = None
    max_leaf_nodes: Optional[int] = None
    min_samples_split: int = 2


# --- split search -----------------------------------------------------------


def _impurity_total(y: np.ndarray, criterion: str, n_classes: int) -> float:
    """Count-weighted impurity: SSE for variance, n*gini for classification."""
    n = len(y)
    if criterion == "variance":
        s1 = float(y.sum())
        return float(np.sum(y * y)) - s1 * s1 / n
    counts = np.bincount(y.astype(np.int64), minlength=n_classes)
    return n - float(np.sum(counts.astype(float) ** 2)) / n


def _best_split(X, y, idx, features, criterion, n_classes):
    """Best (gain, feature, threshold) over candidate features, or None.

    Ties resolve to the lowest feature index, then the lowest threshold,
    matching exhaustive enumeration in that order.
    """
    n = len(idx)
    ysub = y[idx]
    node_imp = _impurity_total(ysub, criterion, n_classes)
    if node_imp <= _GAIN_TOL * max(1.0, abs(node_imp)) or node_imp <= 0:
        return None
    tol = _GAIN_TOL * max(1.0, node_imp)

    best_gain = tol
    best = None
    sizes_l = np.arange(1, n, dtype=float)
    sizes_r = n - sizes_l
    for f in features:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        can_split = xs[:-1] < xs[1:]
        if not can_split.any():
            continue
        ys = ysub[order]
        if criterion == "variance":
            c1 = np.cumsum(ys)[:-1]
            c2 = np.cumsum(ys * ys)[:-1]
            s1, s2 = float(c1[-1] + ys[-1]), float(c2[-1] + ys[-1] ** 2)
            child = (c2 - c1 * c1 / sizes_l) + ((s2 - c2) - (s1 - c1) ** 2 / sizes_r)
        else:
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), ys.astype(np.int64)] = 1.0
            cum = np.cumsum(onehot, axis=0)[:-1]
            total = cum[-1] + onehot[-1]
            left_g = sizes_l - np.sum(cum ** 2, axis=1) / sizes_l
            right_g = sizes_r - np.sum((total - cum) ** 2, axis=1) / sizes_r
            child = left_g + right_g
        gains = np.where(can_split, node_imp - child, -np.inf)
        j = int(np.argmax(gains))
        if gains[j] > best_gain:
            best_gain = float(gains[j])
            thr = float((xs[j] + xs[j + 1]) / 2.0)
            if thr >= xs[j + 1]:
                # adjacent floats have no representable midpoint; split on the
                # lower value so both children stay non-empty
                thr = float(xs[j])
            best = (best_gain, int(f), thr)
    return best


def _leaf_value(y: np.ndarray, criterion: str, n_classes: int) -> np.ndarray:
    if criterion == "variance":
        return np.array([float(y.mean())])
    counts = np.bincount(y.astype(np.int64), minlength=n_classes).astype(float)
    return counts / counts.sum()


def _grow(X, y, sample_idx, params: CartParams, n_classes: int,
          feature_rng: Optional[np.random.Generator], features_per_split: Optional[int]) -> Tree:
    """Greedy best-first growth: the pending split with the largest impurity
    decrease is expanded next, so max_leaf_nodes keeps the most useful splits."""
    n_features = X.shape[1]
    nodes: list[dict] = []

    def new_node(idx, depth):
        nodes.append({
            "idx": idx, "depth": depth, "feature": -1, "threshold": 0.0,
            "left": -1, "right": -1,
            "value": _leaf_value(y[idx], params.criterion, n_classes),
            "n": len(idx),
        })
        return len(nodes) - 1

    def candidate(node_id):
        node = nodes[node_id]
        idx = node["idx"]
        if len(idx) < params.min_samples_split:
            return None
        if params.max_depth is not None and node["depth"] >= params.max_depth:
            return None
        if feature_rng is not None and features_per_split is not None \
                and features_per_split < n_features:
            feats = np.sort(feature_rng.choice(n_features, size=features_per_split,
                                               replace=False))
        else:
            feats = np.arange(n_features)
        return _best_split(X, y, idx, feats, params.criterion, n_classes)

    root = new_node(sample_idx, 0)
    heap: list = []
    counter = 0
    first = candidate(root)
    if first is not None:
        heapq.heappush(heap, (-first[0], counter, root, first))
        counter += 1
    n_leaves = 1
    while heap:
        if params.max_leaf_nodes is not None and n_leaves >= params.max_leaf_nodes:
            break
        _, _, node_id, (gain, feat, thr) = heapq.heappop(heap)
        node = nodes[node_id]
        idx = node["idx"]
        mask = X[idx, feat] <= thr
        left_id = new_node(idx[mask], node["depth"] + 1)
        right_id = new_node(idx[~mask], node["depth"] + 1)
        node.update(feature=feat, threshold=thr, left=left_id, right=right_id)
        n_leaves += 1
        for child_id in (left_id, right_id):
            cand = candidate(child_id)
            if cand is not None:
                heapq.heappush(heap, (-cand[0], counter, child_id, cand))
                counter += 1

    n_outputs = 1 if params.criterion == "variance" else n_classes
    tree = Tree(
        feature=np.array([nd["feature"] for nd in nodes], dtype=np.int64),
        threshold=np.array([nd["threshold"] for nd in nodes], dtype=float),
        left=np.array([nd["left"] for nd in nodes], dtype=np.int64),
        right=np.array([nd["right"] for nd in nodes], dtype=np.int64),
        value=np.array([nd["value"] for nd in nodes], dtype=float).reshape(len(nodes), n_outputs),
        n_samples=np.array([nd["n"] for nd in nodes], dtype=np.int64),
    )
    return tree


def fit_cart(X, y, params: CartParams = CartParams(), seed: int = 0,
             n_classes: Optional[int] = None) -> Tree:
    """Grow one deterministic CART tree over the full feature set."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if len(X) == 0 or len(y) == 0:
        raise EmptyDataError("cannot fit a tree on empty data")
    if len(X) != len(y):
        raise EmptyDataError(f"X has {len(X)} rows, y has {len(y)}")
    if params.criterion not in ("gini", "variance"):
        raise ValueError("criterion must be 'gini' or 'variance'")
    if params.criterion == "gini" and n_classes is None:
        n_classes = max(2, int(y.max()) + 1)
    return _grow(X, y, np.arange(len(X)), params, n_classes or 1, None, None)


# --- random forest ----------------------------------------------------------


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_leaf_nodes: int = 50
    min_samples_split: int = 5
    bootstrap: bool = True
    features_per_split: Optional[int] = None  # None -> ceil(sqrt(K)) cls, ceil(K/3) reg
    seed: int = 0


@dataclass
class ForestModel:
    trees: list[Tree]
    task: str  # "classification" or "regression"
    feature_names: list[str]
    c_full: np.ndarray  # average of per-tree initial (root) nodes
    params: ForestParams
    n_classes: int = 2
    train_mean: Optional[np.ndarray] = None  # full training-set mean, for reference

    def _check(self):
        if not self.trees:
            raise UnfittedModelError("forest has no trees")


def _resolve_mtry(params: ForestParams, task: str, n_features: int) -> int:
    if params.features_per_split is not None:
        return min(params.features_per_split, n_features)
    if task == "classification":
        return min(n_features, math.ceil(math.sqrt(n_features)))
    return min(n_features, math.ceil(n_features / 3))


def fit_forest(X, y, task: str, params: ForestParams = ForestParams(),
               feature_names: Optional[Sequence[str]] = None,
               bootstrap_indices: Optional[np.ndarray] = None) -> ForestModel:
    """Bag of CART trees on bootstrap resamples with per-split feature sampling.

    bootstrap_indices, when given, must be an (n_trees, n) integer array and
    overrides the seed-drawn resamples; sampling is index-based so row order
    carries no information of its own.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if len(X) == 0:
        raise EmptyDataError("cannot fit a forest on empty data")
    if task not in ("classification", "regression"):
        raise ValueError("task must be 'classification' or 'regression'")
    n, k = X.shape
    names = list(feature_names) if feature_names else [f"x{i}" for i in range(k)]
    criterion = "gini" if task == "classification" else "variance"
    n_classes = max(2, int(y.max()) + 1) if task == "classification" else 1
    mtry = _resolve_mtry(params, task, k)
    cart = CartParams(criterion=criterion, max_leaf_nodes=params.max_leaf_nodes,
                      min_samples_split=params.min_samples_split)

    master = np.random.default_rng(params.seed)
    trees = []
    for j in range(params.n_trees):
        tree_seed = int(master.integers(0, 2 ** 63 - 1))
        if bootstrap_indices is not None:
            idx = np.asarray(bootstrap_indices[j], dtype=np.int64)
        elif params.bootstrap:
            idx = master.integers(0, n, n)
        else:
            idx = np.arange(n)
        rng = np.random.default_rng(tree_seed)
        trees.append(_grow(X, y, idx, cart, n_classes, rng, mtry))

    c_full = np.mean([t.value[0] for t in trees], axis=0)
    train_mean = _leaf_value(y, criterion, n_classes)
    return ForestModel(trees, task, names, c_full, params, n_classes, train_mean)


def _forest_values(m: ForestModel, X: np.ndarray) -> np.ndarray:
    """(n_trees, n_rows, n_outputs) stack of leaf values."""
    return np.stack([t.predict_value(X) for t in m.trees])


def _mean_over_trees(stack: np.ndarray) -> np.ndarray:
    """(trees, rows, outputs) -> (rows, outputs).

    The reduction runs along the last axis of a contiguous buffer so each
    row's summation order depends only on the tree count, never on the
    batch shape; a record predicts identically alone or inside any batch.
    """
    moved = np.ascontiguousarray(np.moveaxis(stack, 0, -1))
    return moved.mean(axis=-1)


def forest_proba(m: ForestModel, X) -> np.ndarray:
    """Mean of per-tree leaf class frequencies, shape (n, n_classes)."""
    m._check()
    if m.task != "classification":
        raise ValueError("forest_proba applies to classification forests")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return _mean_over_trees(_forest_values(m, X))


def forest_predict(m: ForestModel, X) -> np.ndarray:
    """Majority vote (arg-max of averaged leaf frequencies) or mean of leaf means."""
    m._check()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    values = _mean_over_trees(_forest_values(m, X))
    if m.task == "classification":
        return np.argmax(values, axis=1).astype(float)
    return values[:, 0]


def forest_decompose(m: ForestModel, x) -> Explanation:
    """Per-feature credit for one prediction following the initial-node identity:
    prediction = mean of tree root values + per-feature averaged split deltas.

    For classification the decomposed quantity is the positive-class probability.
    """
    m._check()
    x = np.asarray(x, dtype=float).ravel()
    out_col = 1 if m.task == "classification" else 0
    contrib = np.zeros(len(m.feature_names))
    roots = np.empty(len(m.trees))
    leaves = np.empty(len(m.trees))
    for j, tree in enumerate(m.trees):
        path = tree.decision_path(x)
        roots[j] = tree.value[path[0], out_col]
        leaves[j] = tree.value[path[-1], out_col]
        for a, b in zip(path[:-1], path[1:]):
            contrib[tree.feature[a]] += tree.value[b, out_col] - tree.value[a, out_col]
    contrib /= len(m.trees)
    baseline = float(np.mean(roots))
    prediction = float(np.mean(leaves))
    return Explanation(
        baseline=baseline,
        contributions={name: float(c) for name, c in zip(m.feature_names, contrib)},
        prediction=prediction,
    )


# --- gradient boosted trees ---------------------------------------------------


@dataclass(frozen=True)
class GbtParams:
    n_stages: int = 500
    max_depth: int = 10
    learning_rate: float = 0.10
    reg_lambda: float = 1.0
    min_samples_split: int = 2
    seed: int = 0


@dataclass
class GbtModel:
    stages: list[Tree]  # regression trees whose leaf values are raw weights w
    loss: str           # "squared" or "logistic"
    base_score: float   # mean (squared) or log-odds of the positive rate (logistic)
    params: GbtParams
    feature_names: list[str] = field(default_factory=list)
    train_losses: list[float] = field(default_factory=list)  # index 0 = before boosting

    def _check(self):
        if self.base_score is None:
            raise UnfittedModelError("gbt model not fitted")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -36.0, 36.0)))


def _logistic_loss(y: np.ndarray, raw: np.ndarray) -> float:
    margins = np.where(y == 1, raw, -raw)
    return float(np.mean(np.logaddexp(0.0, -margins)))


def fit_gbt(X, y, params: GbtParams = GbtParams(), loss: str = "squared",
            feature_names: Optional[Sequence[str]] = None) -> GbtModel:
    """Stagewise boosting: each stage fits a depth-limited regression tree to the
    negative gradients, then re-weights its leaves as -G/(H + lambda)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if len(X) == 0:
        raise EmptyDataError("cannot fit gbt on empty data")
    if loss not in ("squared", "logistic"):
        raise ValueError("loss must be 'squared' or 'logistic'")
    names = list(feature_names) if feature_names else [f"x{i}" for i in range(X.shape[1])]

    if loss == "squared":
        base = float(y.mean())
    else:
        prior = min(max(float(y.mean()), 1e-12), 1.0 - 1e-12)
        base = float(np.log(prior / (1.0 - prior)))
    raw = np.full(len(y), base)
    cart = CartParams(criterion="variance", max_depth=params.max_depth,
                      min_samples_split=params.min_samples_split)

    def current_loss():
        if loss == "squared":
            return float(np.mean((y - raw) ** 2))
        return _logistic_loss(y, raw)

    losses = [current_loss()]
    stages: list[Tree] = []
    eta = params.learning_rate
    for _ in range(params.n_stages):
        if loss == "squared":
            grad = raw - y
            hess = np.ones(len(y))
        else:
            p = _sigmoid(raw)
            grad = p - y
            hess = p * (1.0 - p)
        tree = _grow(X, -grad, np.arange(len(y)), cart, 1, None, None)
        leaf_of = tree.apply(X)
        g_sum = np.bincount(leaf_of, weights=grad, minlength=tree.n_nodes)
        h_sum = np.bincount(leaf_of, weights=hess, minlength=tree.n_nodes)
        weights = np.zeros(tree.n_nodes)
        leaf_mask = tree.feature < 0
        weights[leaf_mask] = -g_sum[leaf_mask] / (h_sum[leaf_mask] + params.reg_lambda)
        tree.value = weights.reshape(-1, 1)
        stages.append(tree)
        raw = raw + eta * weights[leaf_of]
        losses.append(current_loss())

    return GbtModel(stages, loss, base, params, names, losses)


def gbt_raw(m: GbtModel, X, n_stages: Optional[int] = None) -> np.ndarray:
    m._check()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cutoff = len(m.stages) if n_stages is None else n_stages
    if cutoff > len(m.stages):
        raise ValueError(f"cutoff {cutoff} exceeds {len(m.stages)} stages")
    raw = np.full(len(X), m.base_score)
    eta = m.params.learning_rate
    for tree in m.stages[:cutoff]:
        raw += eta * tree.predict_value(X)[:, 0]
    return raw


def gbt_predict(m: GbtModel, X, n_stages: Optional[int] = None) -> np.ndarray:
    """Accumulated stage outputs; the logistic link applies for classification."""
    raw = gbt_raw(m, X, n_stages)
    return _sigmoid(raw) if m.loss == "logistic" else raw
