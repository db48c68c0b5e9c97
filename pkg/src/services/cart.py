"""CART growth on node arrays.

Candidate thresholds are midpoints between consecutive distinct values of a
feature, computed and compared in float64; rows with x <= threshold go left.
Among the candidate splits scoring within SPLIT_TIE_RTOL (relative to the
node impurity) of the best, the smallest (feature index, threshold) wins.
Nodes become leaves below minsplit rows, when pure, or when no feature
varies; there is no depth limit.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import xlogy

from src.errors import ContractError
from src.models.tree import LEAF, FittedTree


logger = logging.getLogger(__name__)

REGRESSION_CRITERIA = ("mse", "mae", "friedman_mse")
CLASSIFICATION_CRITERIA = ("gini", "entropy")
SPLIT_TIE_RTOL = 1e-9
NO_FEATURE = -2
# rank tables of the absolute-deviation score hold m * m entries per feature
SAD_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class Split:
    """Chosen axis-aligned split of one node."""
    feature: int
    threshold: float
    score: float


def midpoint(a: float, b: float) -> float:
    """Threshold t with a <= t < b for a < b."""
    t = a / 2.0 + b / 2.0
    return a if t >= b else t


# Split scores: ys holds the node targets sorted by each candidate feature
# (rows x features); the result has one row per split position k = 1..m-1
# (left = first k rows) and lower is better.

def _sse_scores(ys: np.ndarray) -> np.ndarray:
    m = ys.shape[0]
    centered = ys - ys.mean(axis=0)
    s1 = np.cumsum(centered, axis=0)
    s2 = np.cumsum(centered ** 2, axis=0)
    k = np.arange(1, m, dtype=float)[:, None]
    left = s2[:-1] - s1[:-1] ** 2 / k
    right = (s2[-1] - s2[:-1]) - (s1[-1] - s1[:-1]) ** 2 / (m - k)
    return left + right


def _friedman_scores(ys: np.ndarray) -> np.ndarray:
    m = ys.shape[0]
    s1 = np.cumsum(ys, axis=0)
    k = np.arange(1, m, dtype=float)[:, None]
    diff = s1[:-1] / k - (s1[-1] - s1[:-1]) / (m - k)
    return -(k * (m - k) / m) * diff ** 2


def _prefix_abs_deviation(ys: np.ndarray) -> np.ndarray:
    """Sum of |y - median| over every prefix ys[:k], k = 1..m, per column."""
    m, F = ys.shape
    order = np.argsort(ys, axis=0, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.broadcast_to(np.arange(m)[:, None], (m, F)), axis=0)
    ranked_values = np.take_along_axis(ys, order, axis=0)

    # member[k, r, f]: the value of rank r is among the first k + 1 rows
    member = np.zeros((m, m, F))
    member[np.arange(m)[:, None], rank, np.arange(F)[None, :]] = 1.0
    member = np.cumsum(member, axis=0)
    count_le = np.cumsum(member, axis=1)
    sum_le = np.cumsum(member * ranked_values[None, :, :], axis=1)

    sizes = np.arange(1, m + 1)
    half = sizes // 2

    def smallest(j: np.ndarray) -> np.ndarray:
        at = np.argmax(count_le >= j[:, None, None], axis=1)
        total = np.take_along_axis(sum_le, at[:, None, :], axis=1)[:, 0, :]
        return np.where(j[:, None] > 0, total, 0.0)

    # upper half minus lower half; an odd middle value contributes nothing
    return np.cumsum(ys, axis=0) - smallest(sizes - half) - smallest(half)


def _sad_scores(ys: np.ndarray) -> np.ndarray:
    m, F = ys.shape
    step = max(1, SAD_BLOCK_ELEMENTS // (m * m))
    blocks = []
    for start in range(0, F, step):
        block = ys[:, start:start + step]
        left = _prefix_abs_deviation(block)[:-1]
        right = _prefix_abs_deviation(block[::-1])[:-1][::-1]
        blocks.append(left + right)
    return np.hstack(blocks)


def _class_counts(codes: np.ndarray, n_classes: int) -> np.ndarray:
    """Cumulative class counts per split position (rows x features x classes)."""
    onehot = np.zeros(codes.shape + (n_classes,))
    np.put_along_axis(onehot, codes[..., None], 1.0, axis=-1)
    return np.cumsum(onehot, axis=0)


def _weighted_gini(counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    return sizes - np.sum(counts ** 2, axis=-1) / sizes


def _weighted_entropy(counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    return xlogy(sizes, sizes) - np.sum(xlogy(counts, counts), axis=-1)


class CartBuilder:
    """Grows one CART tree for a regression or classification criterion.

    Attributes:
        criterion: mse, mae, friedman_mse (regression) or gini, entropy
        minsplit: Minimum rows a node needs to be split
        max_features: Features drawn per split (all features when None)
        rng: Stream of the per-split feature draws
    """

    def __init__(
        self,
        criterion: str,
        minsplit: int,
        max_features: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
        classes: Optional[Sequence[int]] = None,
    ):
        if criterion not in REGRESSION_CRITERIA + CLASSIFICATION_CRITERIA:
            raise ContractError(f"Unknown split criterion {criterion!r}")
        if int(minsplit) < 2:
            raise ContractError(f"minsplit must be at least 2, got {minsplit}")
        if max_features is not None and int(max_features) < 1:
            raise ContractError(f"max_features must be positive, got {max_features}")
        if max_features is not None and rng is None:
            raise ContractError("Feature subsampling needs a random stream")
        self.criterion = criterion
        self.minsplit = int(minsplit)
        self.max_features = None if max_features is None else int(max_features)
        self.rng = rng
        self.is_regression = criterion in REGRESSION_CRITERIA
        self.classes = None if classes is None else np.asarray(sorted(set(int(c) for c in classes)))

    def build_tree(self, X: np.ndarray, y: np.ndarray) -> FittedTree:
        """Grow a tree on (X, y); y holds class labels for classification criteria."""
        X = np.asarray(X, dtype=np.float64)
        if self.is_regression:
            target = np.asarray(y, dtype=np.float64)
        else:
            labels = np.asarray(y).astype(np.int64)
            if self.classes is None:
                self.classes = np.unique(labels)
            target = np.searchsorted(self.classes, labels)
            if np.any(self.classes[np.minimum(target, self.classes.size - 1)] != labels):
                raise ContractError("Labels outside the declared classes")

        feature: List[int] = []
        threshold: List[float] = []
        left: List[int] = []
        right: List[int] = []
        value: List[float] = []

        def new_node(rows: np.ndarray) -> int:
            feature.append(NO_FEATURE)
            threshold.append(NO_FEATURE)
            left.append(LEAF)
            right.append(LEAF)
            value.append(self._leaf_value(target[rows]))
            return len(value) - 1

        stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            split = self.find_best_split(X[rows], target[rows])
            if split is None:
                continue
            goes_left = X[rows, split.feature] <= split.threshold
            left_id = new_node(rows[goes_left])
            right_id = new_node(rows[~goes_left])
            feature[node] = split.feature
            threshold[node] = split.threshold
            left[node] = left_id
            right[node] = right_id
            stack.append((right_id, rows[~goes_left]))
            stack.append((left_id, rows[goes_left]))

        return FittedTree(feature=feature, threshold=threshold, left=left, right=right, value=value)

    def _leaf_value(self, target: np.ndarray) -> float:
        if self.is_regression:
            if self.criterion == "mae":
                return float(np.median(target))
            return float(np.mean(target))
        # argmax picks the first maximum, i.e. the smallest label on ties
        return float(self.classes[np.argmax(np.bincount(target, minlength=self.classes.size))])

    def _candidate_features(self, X: np.ndarray) -> np.ndarray:
        varying = np.flatnonzero(np.ptp(X, axis=0) > 0.0)
        if self.max_features is None or varying.size <= self.max_features:
            return varying
        # features are visited in a random order until max_features varying ones are drawn
        usable = set(varying.tolist())
        drawn = [f for f in self.rng.permutation(X.shape[1]) if f in usable]
        return np.sort(np.array(drawn[: self.max_features]))

    def node_impurity(self, target: np.ndarray) -> float:
        """Size-weighted impurity of a node, in the units of its split scores."""
        m = target.shape[0]
        if self.is_regression:
            if self.criterion == "mae":
                return float(np.sum(np.abs(target - np.median(target))))
            return float(np.sum((target - np.mean(target)) ** 2))
        counts = np.bincount(target, minlength=self.classes.size).astype(float)
        if self.criterion == "gini":
            return float(_weighted_gini(counts, float(m)))
        return float(_weighted_entropy(counts, float(m)))

    def _scores(self, ys: np.ndarray) -> np.ndarray:
        if self.criterion == "mse":
            return _sse_scores(ys)
        if self.criterion == "friedman_mse":
            return _friedman_scores(ys)
        if self.criterion == "mae":
            return _sad_scores(ys)
        m = ys.shape[0]
        counts = _class_counts(ys, self.classes.size)
        k = np.arange(1, m, dtype=float)[:, None]
        left, right = counts[:-1], counts[-1][None] - counts[:-1]
        weighted = _weighted_gini if self.criterion == "gini" else _weighted_entropy
        return weighted(left, k) + weighted(right, m - k)

    def find_best_split(self, X: np.ndarray, target: np.ndarray) -> Optional[Split]:
        """Best split of a node, or None when the node is a leaf."""
        m = target.shape[0]
        if m < self.minsplit or np.all(target == target[0]):
            return None
        features = self._candidate_features(X)
        if features.size == 0:
            return None

        order = np.argsort(X[:, features], axis=0, kind="stable")
        xs = np.take_along_axis(X[:, features], order, axis=0)
        scores = self._scores(target[order]).T
        # only positions between two distinct values are splits
        scores[(xs[1:] <= xs[:-1]).T] = np.inf

        best = float(np.min(scores))
        if not np.isfinite(best):
            return None
        if self.criterion == "friedman_mse":
            scale = float(np.sum((target - np.mean(target)) ** 2))
        else:
            scale = self.node_impurity(target)
        winner = int(np.flatnonzero(scores.ravel() <= best + SPLIT_TIE_RTOL * scale)[0])
        f, k = divmod(winner, m - 1)
        return Split(
            feature=int(features[f]),
            threshold=midpoint(float(xs[k, f]), float(xs[k + 1, f])),
            score=float(scores[f, k]),
        )
