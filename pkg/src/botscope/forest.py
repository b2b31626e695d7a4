"""From-scratch random forest: training, scoring, cross-validation, and AUC.

Trees use axis-aligned threshold splits chosen by Gini impurity over a random
feature subset per node; candidate thresholds are midpoints of consecutive
distinct sorted values, with ties routed left (x < t goes left, x >= t right).
Training is bit-reproducible: each tree draws from its own substream spawned
from the master seed, so a parallel implementation would match sequential
output exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._stats import midranks
from .corpus import BOT, HUMAN
from .features import FeatureVector
from .jsonutil import content_version


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    features_per_split: int | None = None  # None: ceil(sqrt(#candidate features))
    feature_indices: tuple[int, ...] | None = None  # None: all coordinates

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("forest params: n_trees, max_depth, min_leaf must be >= 1")


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat node arrays; node 0 is the root, feature -1 marks a leaf."""

    feature: np.ndarray    # int32, -1 for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray       # int32 child index
    right: np.ndarray      # int32 child index
    votes_human: np.ndarray  # int64 leaf vote counts
    votes_bot: np.ndarray

    def vote(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] < self.threshold[node] \
                else self.right[node]
        return 1 if self.votes_bot[node] > self.votes_human[node] else 0

    def votes(self, X: np.ndarray) -> np.ndarray:
        """Vectorized batch vote: route all rows level by level."""
        node = np.zeros(X.shape[0], dtype=np.int32)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            feat = self.feature[cur]
            go_left = X[rows, feat] < self.threshold[cur]
            node[rows[go_left]] = self.left[cur[go_left]]
            node[rows[~go_left]] = self.right[cur[~go_left]]
            active = self.feature[node] >= 0
        return (self.votes_bot[node] > self.votes_human[node]).astype(np.int64)


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[Tree, ...]
    params: ForestParams
    registry_version: str
    training_seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def version(self) -> str:
        return content_version(forest_to_dict(self))


@dataclass(frozen=True)
class EvalReport:
    auc: float
    per_fold_auc: tuple[float, ...]
    n_folds: int
    reference_threshold: float
    confusion: dict[str, int]  # tn, fp, fn, tp at the reference threshold

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError("eval report: auc must lie in [0, 1]")
        if len(self.per_fold_auc) != self.n_folds:
            raise ValueError("eval report: need one AUC per fold")


class _TreeBuilder:
    def __init__(self, X: np.ndarray, y: np.ndarray, params: ForestParams,
                 allowed: np.ndarray, k: int, rng: np.random.Generator):
        self.X = X
        self.y = y
        self.params = params
        self.allowed = allowed
        self.k = k
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.votes_human: list[int] = []
        self.votes_bot: list[int] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.votes_human.append(0)
        self.votes_bot.append(0)
        return len(self.feature) - 1

    def _best_split(self, idx: np.ndarray) -> tuple[int, float] | None:
        min_leaf = self.params.min_leaf
        n = idx.shape[0]
        y = self.y[idx]
        total_pos = int(y.sum())
        candidates = self.rng.choice(self.allowed, size=self.k, replace=False)
        best: tuple[float, int, float] | None = None
        for f in candidates:
            x = self.X[idx, f]
            order = np.argsort(x, kind="mergesort")
            xs = x[order]
            ys = y[order]
            cuts = np.nonzero(xs[:-1] != xs[1:])[0]
            if cuts.size == 0:
                continue
            n_left = cuts + 1
            n_right = n - n_left
            ok = (n_left >= min_leaf) & (n_right >= min_leaf)
            if not ok.any():
                continue
            cuts = cuts[ok]
            n_left = n_left[ok]
            n_right = n_right[ok]
            pos_left = np.cumsum(ys)[cuts]
            pos_right = total_pos - pos_left
            p_l = pos_left / n_left
            p_r = pos_right / n_right
            gini = (n_left * 2.0 * p_l * (1.0 - p_l) + n_right * 2.0 * p_r * (1.0 - p_r)) / n
            j = int(np.argmin(gini))
            score = float(gini[j])
            if best is None or score < best[0]:
                thr = (xs[cuts[j]] + xs[cuts[j] + 1]) / 2.0
                best = (score, int(f), float(thr))
        if best is None:
            return None
        return best[1], best[2]

    def build(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node()
        y = self.y[idx]
        n_pos = int(y.sum())
        n = idx.shape[0]
        if (depth >= self.params.max_depth or n < 2 * self.params.min_leaf
                or n_pos == 0 or n_pos == n):
            self.votes_human[node] = n - n_pos
            self.votes_bot[node] = n_pos
            return node
        split = self._best_split(idx)
        if split is None:
            self.votes_human[node] = n - n_pos
            self.votes_bot[node] = n_pos
            return node
        f, thr = split
        go_left = self.X[idx, f] < thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.build(idx[go_left], depth + 1)
        self.right[node] = self.build(idx[~go_left], depth + 1)
        return node

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            votes_human=np.asarray(self.votes_human, dtype=np.int64),
            votes_bot=np.asarray(self.votes_bot, dtype=np.int64),
        )


def _as_matrix(data: Sequence[tuple[FeatureVector, str]]) -> tuple[np.ndarray, np.ndarray, str]:
    if not data:
        raise ValueError("train: empty training data")
    version = data[0][0].registry_version
    n_features = len(data[0][0].values)
    X = np.empty((len(data), n_features), dtype=np.float64)
    y = np.empty(len(data), dtype=np.int64)
    for i, (vec, label) in enumerate(data):
        if vec.registry_version != version:
            raise ValueError(
                f"train: registry mismatch ({vec.registry_version!r} vs {version!r})")
        if len(vec.values) != n_features:
            raise ValueError("train: feature vectors differ in length")
        if label not in (HUMAN, BOT):
            raise ValueError(f"train: label {label!r} must be '{HUMAN}' or '{BOT}'")
        X[i] = vec.values
        y[i] = 1 if label == BOT else 0
    return X, y, version


def train(data: Sequence[tuple[FeatureVector, str]],
          params: ForestParams = ForestParams(),
          seed: int = 0) -> ForestModel:
    """Train a bootstrap forest; deterministic given (data, params, seed)."""
    X, y, version = _as_matrix(data)
    n_pos = int(y.sum())
    if n_pos < 2 or (len(y) - n_pos) < 2:
        raise ValueError("train: need at least 2 examples of each label")
    return _train_arrays(X, y, version, params, seed)


def _train_arrays(X: np.ndarray, y: np.ndarray, registry_version: str,
                  params: ForestParams, seed: int) -> ForestModel:
    d = X.shape[1]
    if params.feature_indices is not None:
        allowed = np.asarray(sorted(set(params.feature_indices)), dtype=np.int64)
        if allowed.size == 0 or allowed[0] < 0 or allowed[-1] >= d:
            raise ValueError("train: feature_indices out of registry range")
    else:
        allowed = np.arange(d, dtype=np.int64)
    k = params.features_per_split or int(math.ceil(math.sqrt(allowed.size)))
    k = min(k, allowed.size)

    streams = np.random.SeedSequence(int(seed)).spawn(params.n_trees)
    trees: list[Tree] = []
    n = X.shape[0]
    for stream in streams:
        rng = np.random.Generator(np.random.PCG64(stream))
        sample = rng.integers(0, n, size=n)
        builder = _TreeBuilder(X, y, params, allowed, k, rng)
        builder.build(sample, depth=0)
        trees.append(builder.finish())
    return ForestModel(
        trees=tuple(trees), params=params,
        registry_version=registry_version, training_seed=int(seed))


def score(model: ForestModel, x: FeatureVector) -> float:
    """Fraction of trees voting bot; always in [0, 1]."""
    if x.registry_version != model.registry_version:
        raise ValueError(
            f"score: registry mismatch ({x.registry_version!r} vs "
            f"{model.registry_version!r})")
    arr = np.asarray(x.values, dtype=np.float64)
    return sum(t.vote(arr) for t in model.trees) / len(model.trees)


def score_matrix(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Batch scores for a raw feature matrix already aligned with the registry."""
    total = np.zeros(X.shape[0], dtype=np.int64)
    for tree in model.trees:
        total += tree.votes(X)
    return total / len(model.trees)


def score_many(model: ForestModel, xs: Sequence[FeatureVector]) -> list[float]:
    for x in xs:
        if x.registry_version != model.registry_version:
            raise ValueError("score: registry mismatch")
    if not xs:
        return []
    X = np.asarray([x.values for x in xs], dtype=np.float64)
    return [float(v) for v in score_matrix(model, X)]


def auc(scores_pos: Sequence[float], scores_neg: Sequence[float]) -> float:
    """P(random positive outranks random negative), ties counted one half.

    Computed exactly from midranks; equals pairwise enumeration.
    """
    n1 = len(scores_pos)
    n2 = len(scores_neg)
    if n1 == 0 or n2 == 0:
        raise ValueError("auc: both score lists must be non-empty")
    ranks = midranks(list(scores_pos) + list(scores_neg))
    rank_sum_pos = float(ranks[:n1].sum())
    return (rank_sum_pos - n1 * (n1 + 1) / 2.0) / (n1 * n2)


def _stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold assignment per sample: seeded shuffle within each label, dealt round-robin."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0xF01D])))
    fold = np.empty(y.shape[0], dtype=np.int64)
    for label in (0, 1):
        idx = np.nonzero(y == label)[0]
        idx = idx[rng.permutation(idx.shape[0])]
        fold[idx] = np.arange(idx.shape[0]) % k
    return fold


def cross_validate(data: Sequence[tuple[FeatureVector, str]],
                   params: ForestParams = ForestParams(),
                   k: int = 5,
                   seed: int = 0,
                   reference_threshold: float = 0.5) -> EvalReport:
    """Stratified k-fold evaluation pooling out-of-fold scores into one AUC."""
    if k < 2:
        raise ValueError("cross_validate: k must be >= 2")
    X, y, version = _as_matrix(data)
    if X.shape[0] < k:
        raise ValueError("cross_validate: need at least k samples")
    if y.sum() == 0 or y.sum() == len(y):
        raise ValueError("cross_validate: both labels must be present")
    fold = _stratified_folds(y, k, seed)
    for f in range(k):
        held = y[fold == f]
        if held.size == 0 or held.sum() == 0 or held.sum() == held.size:
            raise ValueError(f"cross_validate: fold {f} lacks both labels")

    oof = np.empty(X.shape[0], dtype=np.float64)
    per_fold: list[float] = []
    for f in range(k):
        test = fold == f
        model = _train_arrays(
            X[~test], y[~test], version, params,
            seed=int(np.random.SeedSequence([int(seed), 1 + f]).generate_state(1)[0]))
        s = score_matrix(model, X[test])
        oof[test] = s
        per_fold.append(auc(list(s[y[test] == 1]), list(s[y[test] == 0])))

    pooled = auc(list(oof[y == 1]), list(oof[y == 0]))
    pred = oof > reference_threshold
    confusion = {
        "tn": int(((~pred) & (y == 0)).sum()),
        "fp": int((pred & (y == 0)).sum()),
        "fn": int(((~pred) & (y == 1)).sum()),
        "tp": int((pred & (y == 1)).sum()),
    }
    return EvalReport(
        auc=float(pooled), per_fold_auc=tuple(float(a) for a in per_fold),
        n_folds=k, reference_threshold=reference_threshold, confusion=confusion)


# ---------------------------------------------------------------------------
# Serialization (versioned JSON document; round-trips exactly)
# ---------------------------------------------------------------------------

FOREST_FORMAT = "botscope-forest/1"


def _tree_to_dict(tree: Tree) -> dict:
    return {
        "feature": [int(v) for v in tree.feature],
        "threshold": [float(v) for v in tree.threshold],
        "left": [int(v) for v in tree.left],
        "right": [int(v) for v in tree.right],
        "votes_human": [int(v) for v in tree.votes_human],
        "votes_bot": [int(v) for v in tree.votes_bot],
    }


def _tree_from_dict(data: dict) -> Tree:
    return Tree(
        feature=np.asarray(data["feature"], dtype=np.int32),
        threshold=np.asarray(data["threshold"], dtype=np.float64),
        left=np.asarray(data["left"], dtype=np.int32),
        right=np.asarray(data["right"], dtype=np.int32),
        votes_human=np.asarray(data["votes_human"], dtype=np.int64),
        votes_bot=np.asarray(data["votes_bot"], dtype=np.int64),
    )


def forest_to_dict(model: ForestModel) -> dict:
    return {
        "format": FOREST_FORMAT,
        "registry_version": model.registry_version,
        "training_seed": model.training_seed,
        "params": {
            "n_trees": model.params.n_trees,
            "max_depth": model.params.max_depth,
            "min_leaf": model.params.min_leaf,
            "features_per_split": model.params.features_per_split,
            "feature_indices": (None if model.params.feature_indices is None
                                else list(model.params.feature_indices)),
        },
        "trees": [_tree_to_dict(t) for t in model.trees],
    }


def forest_from_dict(data: dict) -> ForestModel:
    if data.get("format") != FOREST_FORMAT:
        raise ValueError(f"forest document: unsupported format {data.get('format')!r}")
    p = data["params"]
    params = ForestParams(
        n_trees=p["n_trees"], max_depth=p["max_depth"], min_leaf=p["min_leaf"],
        features_per_split=p["features_per_split"],
        feature_indices=(None if p["feature_indices"] is None
                         else tuple(p["feature_indices"])))
    return ForestModel(
        trees=tuple(_tree_from_dict(t) for t in data["trees"]),
        params=params,
        registry_version=data["registry_version"],
        training_seed=data["training_seed"])


def save_forest(model: ForestModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_dict(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_forest(path: str | Path) -> ForestModel:
    with open(path, encoding="utf-8") as fh:
        return forest_from_dict(json.load(fh))
