"""Regression tree techniques, their hyperparameter grid and the class voter.

Trees are grown by the CART builder in src.services.cart straight into
FittedTree node arrays, which prediction and persistence use directly.
"""
import hashlib
import logging
import math
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.errors import ContractError
from src.models.rm_config import (
    BAGGING_DT,
    DECISION_TREE,
    DEFAULT_CLASSIFIER_MEMBERS,
    MINSPLIT_GRID,
    NEST_GRID,
    RANDOM_FOREST,
    REGRESSION_CRITERIA,
    TECHNIQUES,
    ClassifierConfig,
    RMConfig,
)
from src.models.tree import (
    ClassifierEnsemble,
    ClassifierMember,
    FittedTree,
    TrainedRegressor,
)
from src.services.cart import CartBuilder


logger = logging.getLogger(__name__)

QUICK_MINSPLITS = (2, 6, 10)
QUICK_NESTS = (10, 50)


def _configs(minsplits: Sequence[int], nests: Sequence[int]) -> List[RMConfig]:
    configs = []
    for technique in TECHNIQUES:
        crits = REGRESSION_CRITERIA if technique == DECISION_TREE else REGRESSION_CRITERIA[:2]
        for crit in crits:
            for minsplit in minsplits:
                if technique == DECISION_TREE:
                    configs.append(RMConfig(technique, crit, minsplit))
                else:
                    configs.extend(RMConfig(technique, crit, minsplit, nest) for nest in nests)
    return configs


def enumerate_grid() -> List[RMConfig]:
    """All 430 configurations in (technique, crit, minsplit, nest) order."""
    return _configs(MINSPLIT_GRID, NEST_GRID)


def quick_grid() -> List[RMConfig]:
    """Reduced grid for smoke runs: minsplit in {2, 6, 10}, nest in {10, 50}."""
    return _configs(QUICK_MINSPLITS, QUICK_NESTS)


def parse_canonical_name(name: str) -> RMConfig:
    """Parse `RandomForest_crit-mse_minsplit-6_nest-20` (or the dotted spelling)."""
    return RMConfig.parse(name)


def config_seed(seed: int, name: str) -> int:
    """Per-configuration seed derived from the run seed and a canonical name."""
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def training_fingerprint(X: np.ndarray, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(y, dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


def _validate_xy(X, y) -> tuple:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ContractError(f"Training matrix must be non-empty n x p, got shape {X.shape}")
    if X.shape[0] != y.size:
        raise ContractError(f"{X.shape[0]} training rows but {y.size} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ContractError("Training data contains non-finite values")
    return X, y


def _tree_seeds(seed: int, count: int) -> List[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def _grow_regression_tree(X, y, crit: str, minsplit: int, max_features, rng) -> FittedTree:
    return CartBuilder(crit, minsplit, max_features, rng).build_tree(X, y)


def _grow_classification_tree(X, labels, measure: str, minsplit: int, max_features, rng, classes) -> FittedTree:
    return CartBuilder(measure, minsplit, max_features, rng, classes=classes).build_tree(X, labels)


def _subspace(technique: str, p: int) -> Optional[int]:
    """Features considered per split: ceil(sqrt(p)) for RandomForest, all otherwise."""
    if technique == RANDOM_FOREST:
        return max(1, int(math.ceil(math.sqrt(p))))
    return None


def fit_tree_regressor(X, y, crit: str, minsplit: int, seed: int) -> TrainedRegressor:
    """Single CART regression tree without depth limit.

    Raises:
        ContractError: Empty or malformed training data
    """
    X, y = _validate_xy(X, y)
    config = RMConfig(DECISION_TREE, crit, minsplit)
    tree_seed = _tree_seeds(seed, 1)[0]
    tree = _grow_regression_tree(X, y, crit, minsplit, None, None)
    return TrainedRegressor(
        config=config,
        trees=(tree,),
        bootstrap_seeds=(tree_seed,),
        training_fingerprint=training_fingerprint(X, y),
        n_features=X.shape[1],
    )


def fit_forest(
    X,
    y,
    config: RMConfig,
    seed: int,
    bootstrap: bool = True,
    n_trees: Optional[int] = None,
) -> TrainedRegressor:
    """RandomForest or BaggingDT: config.nest trees on seeded bootstrap resamples.

    Args:
        X: n x p training matrix
        y: n targets
        config: Ensemble configuration
        seed: Seed of the per-tree streams
        bootstrap: Resample rows (disable to fit every tree on the full data)
        n_trees: Override of config.nest

    Raises:
        ContractError: Non-ensemble config or malformed training data
    """
    if config.technique not in (RANDOM_FOREST, BAGGING_DT):
        raise ContractError(f"fit_forest needs RandomForest or BaggingDT, got {config.technique}")
    X, y = _validate_xy(X, y)
    n, p = X.shape
    count = n_trees if n_trees is not None else config.nest
    seeds = _tree_seeds(seed, count)
    max_features = _subspace(config.technique, p)
    trees = []
    for tree_seed in seeds:
        rng = np.random.default_rng(tree_seed)
        rows = rng.integers(0, n, n) if bootstrap else np.arange(n)
        trees.append(_grow_regression_tree(X[rows], y[rows], config.crit, config.minsplit, max_features, rng))
    return TrainedRegressor(
        config=config,
        trees=tuple(trees),
        bootstrap_seeds=tuple(seeds),
        training_fingerprint=training_fingerprint(X, y),
        n_features=p,
    )


def fit_regressor(X, y, config: RMConfig, seed: int) -> TrainedRegressor:
    """Fit any grid configuration."""
    if config.technique == DECISION_TREE:
        return fit_tree_regressor(X, y, config.crit, config.minsplit, seed)
    return fit_forest(X, y, config, seed)


def fit_grid(
    X,
    y,
    configs: Sequence[RMConfig],
    seed: int,
    processor=None,
    logger_service=None,
) -> Dict[str, TrainedRegressor]:
    """Fit every configuration, each with its own derived seed.

    Returns:
        canonical_name -> TrainedRegressor, in the order of configs
    """
    X, y = _validate_xy(X, y)
    start = time.time()

    def fit_one(config: RMConfig) -> TrainedRegressor:
        return fit_regressor(X, y, config, config_seed(seed, config.canonical_name))

    if processor is not None:
        models = processor.map_ordered(fit_one, configs, label="regression models")
    else:
        models = [fit_one(c) for c in configs]

    elapsed = time.time() - start
    logger.debug(f"Fitted {len(models)} configs on {X.shape[0]} rows in {elapsed:.2f}s")
    if logger_service:
        logger_service.log_stage_complete(
            "train", f"Fitted {len(models)} regression models on {X.shape[0]} rows", elapsed, len(models)
        )
    return {m.canonical_name: m for m in models}


def predict_regressor_batch(model: TrainedRegressor, X) -> np.ndarray:
    """Predictions for every row of X."""
    return model.predict_batch(X)


def predict_regressor(model: TrainedRegressor, x) -> float:
    """Prediction for one feature vector.

    Raises:
        ContractError: If len(x) differs from the training width
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.n_features:
        raise ContractError(f"Expected {model.n_features} features, got shape {x.shape}")
    return float(model.predict_batch(x.reshape(1, -1))[0])


def fit_classifier_ensemble(
    X,
    labels,
    seed: int,
    members: Sequence[ClassifierConfig] = DEFAULT_CLASSIFIER_MEMBERS,
    bootstrap: bool = False,
) -> ClassifierEnsemble:
    """Fit the voting members on (features -> class labels).

    Without bootstrap every member tree is grown on all training rows, and
    with minsplit 2 it reproduces the labels of distinct rows; RandomForest
    trees still differ through their per-split feature draws. With
    bootstrap each tree sees a seeded resample of the rows instead.

    Raises:
        ContractError: Fewer than two distinct labels
    """
    X, _ = _validate_xy(X, labels)
    labels = np.asarray(labels).astype(np.int64).ravel()
    classes = np.unique(labels)
    if classes.size < 2:
        raise ContractError(f"Classifier needs at least 2 distinct labels, got {classes.tolist()}")
    n, p = X.shape

    fitted = []
    for index, member in enumerate(members):
        seeds = _tree_seeds(config_seed(seed, f"{index}:{member.canonical_name}"), member.nest)
        max_features = _subspace(member.technique, p)
        trees = []
        for tree_seed in seeds:
            rng = np.random.default_rng(tree_seed)
            rows = rng.integers(0, n, n) if bootstrap else np.arange(n)
            trees.append(
                _grow_classification_tree(
                    X[rows], labels[rows], member.split_measure, member.minsplit, max_features, rng, classes
                )
            )
        fitted.append(ClassifierMember(config=member, trees=tuple(trees), bootstrap_seeds=tuple(seeds)))

    logger.debug(f"Fitted {len(fitted)} classifier members on {n} rows, {classes.size} classes")
    return ClassifierEnsemble(
        members=tuple(fitted),
        labels=tuple(int(c) for c in classes),
        n_features=p,
        seed=int(seed),
        bootstrap=bool(bootstrap),
    )


def predict_class_batch(ens: ClassifierEnsemble, X) -> np.ndarray:
    """Majority-vote class for every row of X."""
    return ens.predict_batch(X)


def predict_class(ens: ClassifierEnsemble, x) -> int:
    """Majority-vote class of one feature vector."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return int(ens.predict_batch(x)[0])
