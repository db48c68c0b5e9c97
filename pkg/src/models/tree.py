"""Fitted tree, regressor and classifier ensemble data models."""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from src.errors import ContractError
from src.models.rm_config import ClassifierConfig, RMConfig


LEAF = -1


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FittedTree:
    """Immutable node-array binary tree.

    Node i is a leaf when left[i] == -1; otherwise samples with
    x[feature[i]] <= threshold[i] (compared in float64) go to left[i].

    Attributes:
        feature: Split feature per node (-2 at leaves)
        threshold: Split threshold per node
        left: Left child per node
        right: Right child per node
        value: Prediction per node (leaf mean/median, or class label)
    """
    feature: np.ndarray = field(repr=False)
    threshold: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    value: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "feature", _frozen(self.feature, np.int64))
        object.__setattr__(self, "threshold", _frozen(self.threshold, np.float64))
        object.__setattr__(self, "left", _frozen(self.left, np.int64))
        object.__setattr__(self, "right", _frozen(self.right, np.int64))
        object.__setattr__(self, "value", _frozen(self.value, np.float64))
        sizes = {a.size for a in (self.feature, self.threshold, self.left, self.right, self.value)}
        if len(sizes) != 1 or self.left.size == 0:
            raise ContractError("Tree node arrays must be non-empty and of equal length")

    @property
    def n_nodes(self) -> int:
        return int(self.left.size)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.left == LEAF))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of X."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.left[node] != LEAF
        while np.any(active):
            rows = np.flatnonzero(active)
            current = node[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active = self.left[node] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf values for every row of X."""
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        """Node list representation."""
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FittedTree":
        """Create FittedTree from dictionary."""
        return cls(
            feature=data["feature"],
            threshold=data["threshold"],
            left=data["left"],
            right=data["right"],
            value=data["value"],
        )


def _check_width(X: np.ndarray, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ContractError(f"Expected {n_features} features per row, got shape {X.shape}")
    return X


def majority_vote(votes: np.ndarray) -> np.ndarray:
    """Most frequent label per column of a voters x samples array; smallest label wins ties."""
    votes = np.asarray(votes)
    labels = np.unique(votes)
    counts = (votes[None, :, :] == labels[:, None, None]).sum(axis=1)
    # argmax returns the first maximum, which is the smallest label
    return labels[np.argmax(counts, axis=0)]


@dataclass(frozen=True)
class TrainedRegressor:
    """One fitted regression model configuration.

    Attributes:
        config: Hyperparameter point
        trees: Fitted trees (one for DecisionTree, nest for ensembles)
        bootstrap_seeds: Seed of every tree's resample and split search
        training_fingerprint: Hash of the training (X, y)
        n_features: Width of the training matrix
    """
    config: RMConfig
    trees: Tuple[FittedTree, ...]
    bootstrap_seeds: Tuple[int, ...]
    training_fingerprint: str
    n_features: int

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "bootstrap_seeds", tuple(int(s) for s in self.bootstrap_seeds))
        if len(self.trees) != len(self.bootstrap_seeds):
            raise ContractError("One bootstrap seed per tree is required")

    @property
    def canonical_name(self) -> str:
        return self.config.canonical_name

    def tree_predictions(self, X) -> np.ndarray:
        """trees x samples prediction matrix."""
        X = _check_width(X, self.n_features)
        return np.vstack([tree.predict(X) for tree in self.trees])

    def predict_batch(self, X) -> np.ndarray:
        """Unweighted mean of the tree predictions."""
        return np.mean(self.tree_predictions(X), axis=0)

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "config": self.config.to_dict(),
            "trees": [tree.to_dict() for tree in self.trees],
            "bootstrap_seeds": list(self.bootstrap_seeds),
            "training_fingerprint": self.training_fingerprint,
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedRegressor":
        """Create TrainedRegressor from dictionary."""
        return cls(
            config=RMConfig.from_dict(data["config"]),
            trees=tuple(FittedTree.from_dict(t) for t in data["trees"]),
            bootstrap_seeds=tuple(data["bootstrap_seeds"]),
            training_fingerprint=data["training_fingerprint"],
            n_features=int(data["n_features"]),
        )


@dataclass(frozen=True)
class ClassifierMember:
    """One fitted member of the classifier ensemble; its trees vote."""
    config: ClassifierConfig
    trees: Tuple[FittedTree, ...]
    bootstrap_seeds: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "bootstrap_seeds", tuple(int(s) for s in self.bootstrap_seeds))

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        votes = np.vstack([tree.predict(X) for tree in self.trees]).astype(np.int64)
        return majority_vote(votes)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "trees": [tree.to_dict() for tree in self.trees],
            "bootstrap_seeds": list(self.bootstrap_seeds),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierMember":
        return cls(
            config=ClassifierConfig.from_dict(data["config"]),
            trees=tuple(FittedTree.from_dict(t) for t in data["trees"]),
            bootstrap_seeds=tuple(data["bootstrap_seeds"]),
        )


@dataclass(frozen=True)
class ClassifierEnsemble:
    """Majority vote over the member classifiers.

    Attributes:
        members: Fitted members in configuration order
        labels: Sorted class labels seen in training
        n_features: Width of the training matrix
        seed: Seed the members were derived from
        bootstrap: Whether member trees were fitted on resampled rows
    """
    members: Tuple[ClassifierMember, ...]
    labels: Tuple[int, ...]
    n_features: int
    seed: int = 0
    bootstrap: bool = False

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "labels", tuple(int(c) for c in self.labels))

    def member_votes(self, X) -> np.ndarray:
        """members x samples vote matrix."""
        X = _check_width(X, self.n_features)
        return np.vstack([member.predict_batch(X) for member in self.members])

    def predict_batch(self, X) -> np.ndarray:
        return majority_vote(self.member_votes(X))

    def to_dict(self) -> dict:
        return {
            "members": [member.to_dict() for member in self.members],
            "labels": list(self.labels),
            "n_features": self.n_features,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierEnsemble":
        return cls(
            members=tuple(ClassifierMember.from_dict(m) for m in data["members"]),
            labels=tuple(data["labels"]),
            n_features=int(data["n_features"]),
            seed=int(data.get("seed", 0)),
            bootstrap=bool(data.get("bootstrap", False)),
        )
