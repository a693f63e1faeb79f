"""Random forest: bootstrapped CART trees with Gini-impurity axis splits and
majority voting. Per-tree seeds derive from the master seed, so fitting is
deterministic and trees could be grown in parallel without changing results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .config import TrainConfig
from .features import N_CLASSES

# Tree nodes are plain dicts (JSON-friendly): internal nodes carry
# {"feature", "threshold", "left", "right"}; leaves carry {"counts"}.


def _gini_best_threshold(column: np.ndarray, y: np.ndarray):
    """Best split of one feature column, or None when the column is constant.

    Returns (weighted_gini, threshold) where threshold is the midpoint of the
    neighbouring distinct values.
    """
    n = len(y)
    order = np.argsort(column, kind="stable")
    sorted_col = column[order]
    boundaries = np.nonzero(sorted_col[1:] > sorted_col[:-1])[0] + 1
    if len(boundaries) == 0:
        return None
    one_hot = np.zeros((n, N_CLASSES))
    one_hot[np.arange(n), y[order]] = 1.0
    prefix = np.vstack([np.zeros(N_CLASSES), np.cumsum(one_hot, axis=0)])
    left = prefix[boundaries]
    right = prefix[n] - left
    n_left = boundaries.astype(float)
    n_right = n - n_left
    gini_left = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    best = int(np.argmin(weighted))
    cut = boundaries[best]
    threshold = 0.5 * (sorted_col[cut - 1] + sorted_col[cut])
    return float(weighted[best]), float(threshold)


def _find_split(X: np.ndarray, y: np.ndarray, feature_order: np.ndarray, k: int):
    """Scan features in the given random order: the first k form the candidate
    pool, and the scan keeps extending past k until some feature admits a
    valid split (mirroring the usual max_features semantics)."""
    best = None
    for position, feature in enumerate(feature_order):
        if position >= k and best is not None:
            break
        result = _gini_best_threshold(X[:, feature], y)
        if result is None:
            continue
        impurity, threshold = result
        if best is None or impurity < best[0]:
            best = (impurity, int(feature), threshold)
    return best


def _resolve_max_features(max_features: str | int, n_features: int) -> int:
    if max_features == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    if isinstance(max_features, int) and 1 <= max_features <= n_features:
        return max_features
    raise ValueError(f"max_features must be 'sqrt' or an int in [1, {n_features}]")


def _build_tree(X, y, rng, k, max_depth):
    n_features = X.shape[1]
    root: dict = {}
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        labels = y[idx]
        counts = np.bincount(labels, minlength=N_CLASSES)
        at_depth_limit = max_depth is not None and depth >= max_depth
        if at_depth_limit or len(idx) < 2 or counts.max() == len(idx):
            node["counts"] = counts.tolist()
            continue
        split = _find_split(X[idx], labels, rng.permutation(n_features), k)
        if split is None:
            node["counts"] = counts.tolist()
            continue
        _, feature, threshold = split
        mask = X[idx, feature] <= threshold
        node["feature"] = feature
        node["threshold"] = threshold
        node["left"] = {}
        node["right"] = {}
        stack.append((node["left"], idx[mask], depth + 1))
        stack.append((node["right"], idx[~mask], depth + 1))
    return root


def _tree_vote(node: dict, x: np.ndarray) -> int:
    while "counts" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return int(np.argmax(node["counts"]))  # ties fall to the lowest class index


@dataclass
class ForestModel:
    trees: list[dict]
    seed: int = 0
    loss_curve: list[float] = field(default_factory=list)  # unused; kept for parity

    kind: ClassVar[str] = "rf"

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((X.shape[0], N_CLASSES))
        for tree in self.trees:
            for i, x in enumerate(X):
                votes[i, _tree_vote(tree, x)] += 1.0
        return votes / len(self.trees)


def fit(X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> ForestModel:
    n = X.shape[0]
    k = _resolve_max_features(cfg.max_features, X.shape[1])
    trees = []
    for tree_index in range(cfg.n_trees):
        rng = np.random.default_rng([cfg.seed, tree_index])
        if cfg.bootstrap:
            sample = rng.integers(0, n, size=n)
            trees.append(_build_tree(X[sample], y[sample], rng, k, cfg.max_depth))
        else:
            trees.append(_build_tree(X, y, rng, k, cfg.max_depth))
    return ForestModel(trees=trees, seed=cfg.seed)
