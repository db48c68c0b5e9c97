"""Training and application of personalized per-class regression ensembles."""
import logging
import math
import time
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import ContractError, DataError, InternalConsistencyError
from src.models.feature_vector import FeatureTable, FeatureVector
from src.models.performance_record import PerformanceRecord
from src.models.personalized import (
    TARGET_MODES,
    ClassEnsemble,
    EnsembleMember,
    PersonalizedModel,
    QTable,
)
from src.models.rm_config import DEFAULT_CLASSIFIER_MEMBERS, TECHNIQUES, ClassifierConfig, RMConfig
from src.models.tree import ClassifierEnsemble, TrainedRegressor
from src.services import tree_models


logger = logging.getLogger(__name__)

PRECISION_FLOOR = 1e-8

Key = Tuple[int, int]
PerformanceSource = Union[Sequence[PerformanceRecord], Mapping]


def normalize_target_mode(mode: str) -> str:
    """Accept raw, log or natural_log."""
    value = (mode or "").strip().lower()
    if value == "log":
        value = "natural_log"
    if value not in TARGET_MODES:
        raise ContractError(f"Unknown target transform {mode!r}; expected raw, log or natural_log")
    return value


def transform_target(value: float, mode: str) -> float:
    """raw -> identity; natural_log -> ln(max(value, 1e-8)).

    Raises:
        DataError: Negative precision
    """
    mode = normalize_target_mode(mode)
    value = float(value)
    if not (value >= 0.0):
        raise DataError(f"Target precision must be nonnegative, got {value}")
    if mode == "raw":
        return value
    return math.log(max(value, PRECISION_FLOOR))


def performance_lookup(records: Sequence[PerformanceRecord], algorithm_id: str, budget: int) -> Dict[Key, float]:
    """(problem_id, instance_id) -> raw precision for one algorithm and budget."""
    lookup = {}
    for rec in records:
        if rec.algorithm_id == algorithm_id and rec.budget == int(budget):
            lookup[(rec.problem_id, rec.instance_id)] = rec.target_precision
    if not lookup:
        raise DataError(f"No performance records for algorithm {algorithm_id!r} at budget {budget}")
    return lookup


@dataclass
class JoinedData:
    """Feature rows aligned with their transformed targets.

    Attributes:
        keys: (problem_id, instance_id) per row
        X: rows x features matrix
        y: Transformed targets
        labels: Problem class per row
    """
    keys: List[Key]
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)


def check_join(features: FeatureTable, targets: Mapping, keys: Optional[Sequence[Key]] = None) -> None:
    """Verify every requested feature row has a target and vice versa.

    Only membership is tested; no target value is read.

    Raises:
        DataError: Listing the orphan keys
    """
    feature_keys = set(features.keys)
    wanted = list(keys) if keys is not None else sorted(feature_keys)
    missing_features = [k for k in wanted if k not in feature_keys]
    missing_targets = [k for k in wanted if k not in targets]
    if missing_features:
        raise DataError("Rows without feature vectors", keys=missing_features)
    if missing_targets:
        raise DataError("Feature rows without performance data", keys=missing_targets)


def feature_rows(features: FeatureTable, keys: Sequence[Key]) -> np.ndarray:
    index = {k: i for i, k in enumerate(features.keys)}
    missing = [k for k in keys if k not in index]
    if missing:
        raise DataError("Rows without feature vectors", keys=missing)
    return features.matrix[[index[k] for k in keys]]


def join_rows(features: FeatureTable, targets: Mapping, keys: Sequence[Key], mode: str) -> JoinedData:
    """Join features and targets on exactly the given keys."""
    keys = list(keys)
    check_join(features, targets, keys)
    X = feature_rows(features, keys)
    y = np.array([transform_target(targets[k], mode) for k in keys])
    labels = np.array([k[0] for k in keys], dtype=np.int64)
    return JoinedData(keys=keys, X=X, y=y, labels=labels)


def prediction_matrix(models: Dict[str, TrainedRegressor], X: np.ndarray) -> np.ndarray:
    """configs x rows predictions, rows of models in their dict order."""
    return np.vstack([m.predict_batch(X) for m in models.values()])


def q_table_from_predictions(
    configs: Sequence[RMConfig],
    predictions: np.ndarray,
    y: np.ndarray,
    labels: np.ndarray,
    classes: Optional[Sequence[int]] = None,
) -> QTable:
    """Per-class MAE from a configs x rows prediction matrix."""
    labels = np.asarray(labels)
    classes = sorted(int(c) for c in (classes if classes is not None else np.unique(labels)))
    residuals = np.abs(predictions - np.asarray(y)[None, :])
    columns = []
    for cid in classes:
        mask = labels == cid
        if not np.any(mask):
            raise ContractError(f"Class {cid} has no training rows")
        columns.append(residuals[:, mask].mean(axis=1))
    return QTable(configs=list(configs), classes=classes, values=np.column_stack(columns))


def score_configs_per_class(
    models: Dict[str, TrainedRegressor],
    X,
    y,
    labels,
    classes: Optional[Sequence[int]] = None,
) -> QTable:
    """q(config, class) = MAE of the config's predictions on that class's rows.

    Raises:
        ContractError: A requested class has no rows
    """
    X = np.asarray(X, dtype=float)
    configs = [m.config for m in models.values()]
    return q_table_from_predictions(configs, prediction_matrix(models, X), np.asarray(y, dtype=float), labels, classes)


def argmin_config(configs: Sequence[RMConfig], scores: Sequence[float]) -> RMConfig:
    """Lowest score; ties go to the earlier grid position."""
    if len(configs) == 0:
        raise ContractError("No configurations to select from")
    best = min(range(len(configs)), key=lambda i: (float(scores[i]), configs[i].grid_key))
    return configs[best]


def select_best_per_technique(
    q_table: QTable,
    class_id: int,
    techniques: Sequence[str] = TECHNIQUES,
) -> List[RMConfig]:
    """Per technique, the configuration with minimal q for the class.

    Raises:
        ContractError: A technique has no configuration in the table
    """
    column = q_table.column(class_id)
    selected = []
    for technique in techniques:
        rows = [i for i, c in enumerate(q_table.configs) if c.technique == technique]
        if not rows:
            raise ContractError(f"q table has no {technique} configurations")
        selected.append(argmin_config([q_table.configs[i] for i in rows], column[rows]))
    return selected


def compute_weights(q) -> np.ndarray:
    """Min-max normalised importance, w_j = q_norm_j / sum(q_norm).

    The lowest q gets the largest weight and the highest q gets 0; when
    all q are equal the weights are uniform.

    Raises:
        ContractError: Fewer than two members, or non-finite or negative q
    """
    q = np.asarray(q, dtype=float).ravel()
    if q.size < 2:
        raise ContractError(f"Need at least 2 members to weight, got {q.size}")
    if not np.all(np.isfinite(q)) or np.any(q < 0.0):
        raise ContractError(f"q values must be finite and nonnegative: {q.tolist()}")
    q_max, q_min = float(np.max(q)), float(np.min(q))
    if q_max == q_min:
        return np.full(q.size, 1.0 / q.size)
    q_norm = (q_max - q) / (q_max - q_min)
    return q_norm / np.sum(q_norm)


def build_class_ensemble(
    q_table: QTable,
    class_id: int,
    models: Dict[str, TrainedRegressor],
    techniques: Sequence[str] = TECHNIQUES,
) -> ClassEnsemble:
    """Select, weight and package the ensemble of one class."""
    selected = select_best_per_technique(q_table, class_id, techniques)
    q = np.array([q_table.value(c.canonical_name, class_id) for c in selected])
    weights = compute_weights(q)
    members = []
    for config, q_j, w_j in zip(selected, q, weights):
        try:
            model = models[config.canonical_name]
        except KeyError:
            raise InternalConsistencyError(f"No fitted model for selected config {config.canonical_name}")
        members.append(EnsembleMember(model=model, q=float(q_j), weight=float(w_j)))
    return ClassEnsemble(class_id=int(class_id), members=tuple(members))


def fit_personalized_from_models(
    q_table: QTable,
    models: Dict[str, TrainedRegressor],
    classifier: ClassifierEnsemble,
    target_transform: str,
    feature_names: Sequence[str] = (),
    seed: int = 0,
    techniques: Sequence[str] = TECHNIQUES,
    metadata: Optional[dict] = None,
) -> PersonalizedModel:
    """Selection and weighting half of training, on an already scored grid.

    Args:
        q_table: Per-class q values of every configuration
        models: Models the selected configurations are taken from
        classifier: Fitted class gate
        target_transform: raw or natural_log
        feature_names: Training column order
        seed: Training seed (provenance)
        techniques: One member per technique, in this order
        metadata: Provenance
    """
    ensembles = {
        int(cid): build_class_ensemble(q_table, cid, models, techniques)
        for cid in q_table.classes
    }
    return PersonalizedModel(
        classifier=classifier,
        ensembles=ensembles,
        target_transform=normalize_target_mode(target_transform),
        feature_names=tuple(feature_names),
        seed=int(seed),
        metadata=dict(metadata or {}),
    )


def validation_split(keys: Sequence[Key]) -> Tuple[List[int], List[int]]:
    """Row positions (fit, weighting): the last instance of every class is held out."""
    last = {}
    for pid, iid in keys:
        last[pid] = max(iid, last.get(pid, iid))
    fit_rows = [i for i, (pid, iid) in enumerate(keys) if iid != last[pid]]
    hold_rows = [i for i, (pid, iid) in enumerate(keys) if iid == last[pid]]
    return fit_rows, hold_rows


def train_from_joined(
    data: JoinedData,
    grid: Sequence[RMConfig],
    target_transform: str,
    seed: int,
    feature_names: Sequence[str] = (),
    weight_on_validation: bool = False,
    refit_selected: bool = True,
    classifier_members: Sequence[ClassifierConfig] = DEFAULT_CLASSIFIER_MEMBERS,
    full_models: Optional[Dict[str, TrainedRegressor]] = None,
    processor=None,
    logger_service=None,
    metadata: Optional[dict] = None,
) -> PersonalizedModel:
    """Fit grid, score per class, weight and fit the class gate on joined rows.

    Args:
        data: Training rows
        grid: Configurations to consider
        target_transform: Mode the targets in data were transformed with
        seed: Seed of the grid and classifier streams
        weight_on_validation: Measure q on held-out last instances
        refit_selected: With validation weighting, refit selected configs on all rows
        full_models: Grid already fitted on all rows (skips refitting)
    """
    grid = list(grid)
    if len({lab for lab in data.labels.tolist()}) < 2:
        raise ContractError("Training data must contain at least 2 problem classes")

    if full_models is None:
        full_models = tree_models.fit_grid(data.X, data.y, grid, seed, processor, logger_service)

    if weight_on_validation:
        fit_rows, hold_rows = validation_split(data.keys)
        if not fit_rows:
            raise ContractError("Validation weighting needs at least 2 training instances per class")
        sub_models = tree_models.fit_grid(data.X[fit_rows], data.y[fit_rows], grid, seed, processor)
        q_table = score_configs_per_class(sub_models, data.X[hold_rows], data.y[hold_rows], data.labels[hold_rows])
        source = full_models if refit_selected else sub_models
    else:
        q_table = q_table_from_predictions(
            [m.config for m in full_models.values()],
            prediction_matrix(full_models, data.X),
            data.y,
            data.labels,
        )
        source = full_models

    classifier = tree_models.fit_classifier_ensemble(data.X, data.labels, seed, classifier_members)
    meta = dict(metadata or {})
    meta.update({"weight_on_validation": weight_on_validation, "refit_selected": refit_selected})
    return fit_personalized_from_models(
        q_table, source, classifier, target_transform, feature_names, seed, metadata=meta
    )


def train_personalized(
    features: FeatureTable,
    performance: PerformanceSource,
    training_keys: Optional[Sequence[Key]],
    grid: Sequence[RMConfig],
    target_transform: str,
    seed: int,
    algorithm_id: Optional[str] = None,
    budget: Optional[int] = None,
    weight_on_validation: bool = False,
    refit_selected: bool = True,
    processor=None,
    logger_service=None,
    metadata: Optional[dict] = None,
) -> PersonalizedModel:
    """Train a personalized model on the given (problem_id, instance_id) rows.

    Args:
        features: Feature table
        performance: Performance records (filtered by algorithm_id and budget)
            or a ready (problem_id, instance_id) -> precision mapping
        training_keys: Rows to train on (all feature rows when None)
        grid: Regression configurations
        target_transform: raw, log or natural_log
        seed: Training seed

    Raises:
        DataError: Orphan keys between features and performance data
    """
    start = time.time()
    mode = normalize_target_mode(target_transform)
    if isinstance(performance, Mapping):
        targets = performance
    else:
        if algorithm_id is None or budget is None:
            raise ContractError("algorithm_id and budget are required to filter performance records")
        targets = performance_lookup(performance, algorithm_id, budget)
    if training_keys is None:
        check_join(features, targets)
        orphans = sorted(k for k in targets if k not in set(features.keys))
        if orphans:
            raise DataError("Performance rows without feature vectors", keys=orphans)
        training_keys = sorted(features.keys)

    data = join_rows(features, targets, sorted(training_keys), mode)
    if logger_service:
        logger_service.log_stage_start(
            "train", f"Training on {len(data.keys)} rows, {len(grid)} configs, target {mode}"
        )
    meta = dict(metadata or {})
    meta.update({"algorithm": algorithm_id, "budget": budget, "n_train_rows": len(data.keys)})
    model = train_from_joined(
        data,
        grid,
        mode,
        seed,
        feature_names=features.names,
        weight_on_validation=weight_on_validation,
        refit_selected=refit_selected,
        processor=processor,
        logger_service=logger_service,
        metadata=meta,
    )
    if logger_service:
        logger_service.log_stage_complete(
            "train", f"Personalized model with {len(model.ensembles)} class ensembles",
            time.time() - start, len(model.ensembles),
        )
    return model


def _as_row(model: PersonalizedModel, fv) -> np.ndarray:
    if isinstance(fv, FeatureVector):
        if model.feature_names and tuple(fv.names) != tuple(model.feature_names):
            raise ContractError("Feature vector names differ from the model's training features")
        values = fv.values
    else:
        values = np.asarray(fv, dtype=float).ravel()
    if values.size != model.classifier.n_features:
        raise ContractError(f"Expected {model.classifier.n_features} features, got {values.size}")
    return values.reshape(1, -1)


def predict_with_known_class_batch(model: PersonalizedModel, X, classes) -> np.ndarray:
    """Ensemble predictions for rows whose class is given."""
    X = np.asarray(X, dtype=float)
    classes = np.asarray(classes, dtype=np.int64).ravel()
    out = np.empty(X.shape[0])
    for cid in np.unique(classes):
        rows = np.flatnonzero(classes == cid)
        out[rows] = model.ensemble(int(cid)).predict_batch(X[rows])
    return out


def predict_batch(model: PersonalizedModel, X) -> Tuple[np.ndarray, np.ndarray]:
    """(predictions, predicted classes) for every row of X."""
    X = np.asarray(X, dtype=float)
    classes = model.classifier.predict_batch(X)
    missing = sorted(set(int(c) for c in classes) - set(model.ensembles))
    if missing:
        raise InternalConsistencyError(f"Classifier predicted classes without ensembles: {missing}")
    return predict_with_known_class_batch(model, X, classes), classes


def predict(model: PersonalizedModel, fv) -> Tuple[float, int]:
    """Classify, then combine the class ensemble: y = sum_j w_j y_j."""
    ys, classes = predict_batch(model, _as_row(model, fv))
    return float(ys[0]), int(classes[0])


def predict_with_known_class(model: PersonalizedModel, fv, true_class: int) -> float:
    """Ensemble prediction of the given class, skipping classification.

    Raises:
        ContractError: Unknown class
    """
    row = _as_row(model, fv)
    return float(model.ensemble(true_class).predict_batch(row)[0])


def ensemble_composition(model: PersonalizedModel) -> Dict[int, List[Tuple[str, float, float]]]:
    """class_id -> [(canonical_name, q, weight)]."""
    return model.composition()
