"""Instance-stratified cross-validation of the five comparison scenarios."""
import logging
import time
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix as sk_confusion_matrix

from src.errors import ContractError, DataError, InternalConsistencyError
from src.models.evaluation import (
    BEST_TEST,
    BEST_TRAIN,
    BEST_TRAIN_INSTANCE,
    ENSEMBLE_CLASS,
    ENSEMBLE_GROUND,
    SCENARIOS,
    ConfusionMatrix,
    FoldSpec,
    ScenarioReport,
)
from src.models.feature_vector import FeatureTable
from src.models.rm_config import RMConfig
from src.services import personalize, tree_models
from src.services.personalize import (
    PerformanceSource,
    argmin_config,
    normalize_target_mode,
    performance_lookup,
    transform_target,
)


logger = logging.getLogger(__name__)

Key = Tuple[int, int]
ClassPredictor = Callable[[np.ndarray, List[Key]], np.ndarray]

__all__ = [
    "make_stratified_folds",
    "mae",
    "median_ae",
    "select_best_train",
    "select_best_test",
    "select_best_train_instance",
    "run_evaluation",
    "relative_advantage",
    "transform_target",
    "win_counts",
    "misclassifications",
    "accuracy",
    "oracle_class_predictor",
]


def make_stratified_folds(keys: Iterable[Key]) -> FoldSpec:
    """Fold t holds instance t of every problem.

    Raises:
        DataError: If problems do not share the same instance ids
    """
    per_problem: Dict[int, set] = {}
    for pid, iid in keys:
        per_problem.setdefault(int(pid), set()).add(int(iid))
    if not per_problem:
        raise DataError("No instances to fold")
    all_ids = sorted(set().union(*per_problem.values()))
    incomplete = [
        (pid, sorted(set(all_ids) - iids)) for pid, iids in sorted(per_problem.items()) if iids != set(all_ids)
    ]
    if incomplete:
        raise DataError(
            "Problems missing instances (problem, missing ids)", keys=incomplete
        )
    if len(all_ids) < 2:
        raise DataError(f"Need at least 2 instances per problem to fold, got {all_ids}")
    return FoldSpec(fold_ids=tuple(all_ids), problems=tuple(sorted(per_problem)))


def _abs_errors(preds, truths) -> np.ndarray:
    preds = np.asarray(preds, dtype=float).ravel()
    truths = np.asarray(truths, dtype=float).ravel()
    if preds.size == 0 or preds.size != truths.size:
        raise ContractError(f"Need equal, nonzero lengths; got {preds.size} and {truths.size}")
    return np.abs(preds - truths)


def mae(preds, truths) -> float:
    """Mean absolute error."""
    return float(np.mean(_abs_errors(preds, truths)))


def median_ae(preds, truths) -> float:
    """Median absolute error (midpoint of the central pair for even counts)."""
    return float(np.median(_abs_errors(preds, truths)))


def select_best_train(configs: Sequence[RMConfig], train_mae: Sequence[float]) -> RMConfig:
    """Lowest MAE over the training rows of all problems."""
    return argmin_config(configs, train_mae)


def select_best_train_instance(q_table, problem_id: int) -> RMConfig:
    """Lowest training MAE on one problem's rows."""
    return argmin_config(q_table.configs, q_table.column(problem_id))


def select_best_test(configs: Sequence[RMConfig], test_residuals: np.ndarray) -> RMConfig:
    """Lowest MAE over pooled test residuals (configs x residuals)."""
    residuals = np.abs(np.asarray(test_residuals, dtype=float))
    return argmin_config(configs, residuals.mean(axis=1))


def oracle_class_predictor(X: np.ndarray, keys: List[Key]) -> np.ndarray:
    """Class predictor returning the true problem id of every row."""
    return np.array([pid for pid, _ in keys], dtype=np.int64)


@dataclass
class FoldOutcome:
    """Everything one fold contributes to the report."""
    fold: int
    keys: List[Key]
    truths: np.ndarray
    predictions: Dict[str, np.ndarray]
    predicted_classes: np.ndarray
    best_train: str
    best_train_instance: Dict[int, str]
    composition: Dict[int, list]
    test_residuals: Optional[np.ndarray]


def _check_finite(name: str, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise InternalConsistencyError(f"{name} produced non-finite predictions")


def _evaluate_fold(
    t: int,
    folds: FoldSpec,
    features: FeatureTable,
    targets: Mapping,
    grid: List[RMConfig],
    mode: str,
    seed: int,
    include_best_test: bool,
    class_predictor: Optional[ClassPredictor],
    weight_on_validation: bool,
    refit_selected: bool,
    processor,
    logger_service,
) -> FoldOutcome:
    start = time.time()
    fold_id = folds.fold_ids[t]
    fold_seed = tree_models.config_seed(seed, f"fold:{fold_id}")
    if logger_service:
        logger_service.log_stage_start("evaluate", f"Fold {fold_id}: training", fold=fold_id)

    train = personalize.join_rows(features, targets, folds.train_keys(t), mode)
    models = tree_models.fit_grid(train.X, train.y, grid, fold_seed, processor)
    configs = [m.config for m in models.values()]
    train_pred = personalize.prediction_matrix(models, train.X)
    q_table = personalize.q_table_from_predictions(configs, train_pred, train.y, train.labels)
    train_mae = np.abs(train_pred - train.y[None, :]).mean(axis=1)

    model = personalize.train_from_joined(
        train,
        grid,
        mode,
        fold_seed,
        feature_names=features.names,
        weight_on_validation=weight_on_validation,
        refit_selected=refit_selected,
        full_models=models,
        processor=processor,
    )
    best_train = select_best_train(configs, train_mae).canonical_name
    best_instance = {
        pid: select_best_train_instance(q_table, pid).canonical_name for pid in folds.problems
    }

    test_keys = folds.test_keys(t)
    X_test = personalize.feature_rows(features, test_keys)
    true_classes = np.array([pid for pid, _ in test_keys], dtype=np.int64)
    if class_predictor is not None:
        predicted_classes = np.asarray(class_predictor(X_test, test_keys), dtype=np.int64)
    else:
        predicted_classes = model.classifier.predict_batch(X_test)

    predictions = {
        ENSEMBLE_GROUND: personalize.predict_with_known_class_batch(model, X_test, true_classes),
        ENSEMBLE_CLASS: personalize.predict_with_known_class_batch(model, X_test, predicted_classes),
        BEST_TRAIN: models[best_train].predict_batch(X_test),
        BEST_TRAIN_INSTANCE: np.array([
            float(models[best_instance[pid]].predict_batch(X_test[[i]])[0])
            for i, (pid, _) in enumerate(test_keys)
        ]),
    }
    test_pred = personalize.prediction_matrix(models, X_test) if include_best_test else None
    for name, values in predictions.items():
        _check_finite(name, values)
    if test_pred is not None:
        _check_finite("grid", test_pred)

    # Held-out targets are read only after every prediction of the fold exists
    if logger_service:
        logger_service.log(
            "DEBUG", f"Fold {fold_id}: predictions ready", operation_type="evaluate",
            fold=fold_id, status="predicted",
        )
    truths = np.array([transform_target(targets[k], mode) for k in test_keys])

    accuracy_t = float(np.mean(predicted_classes == true_classes))
    if logger_service:
        logger_service.log_fold_complete(fold_id, len(test_keys), time.time() - start, accuracy_t)
    return FoldOutcome(
        fold=fold_id,
        keys=test_keys,
        truths=truths,
        predictions=predictions,
        predicted_classes=predicted_classes,
        best_train=best_train,
        best_train_instance=best_instance,
        composition=model.composition(),
        test_residuals=(test_pred - truths[None, :]) if test_pred is not None else None,
    )


def run_evaluation(
    features: FeatureTable,
    performance: PerformanceSource,
    grid: Sequence[RMConfig],
    seed: int,
    target_transform: str = "natural_log",
    algorithm_id: Optional[str] = None,
    budget: Optional[int] = None,
    include_best_test: bool = True,
    class_predictor: Optional[ClassPredictor] = None,
    weight_on_validation: bool = False,
    refit_selected: bool = True,
    processor=None,
    fold_processor=None,
    logger_service=None,
    metadata: Optional[dict] = None,
) -> Tuple[ScenarioReport, ConfusionMatrix]:
    """Cross-validate the five scenarios over instance-stratified folds.

    Args:
        features: Feature table of every (problem, instance)
        performance: Records (filtered by algorithm_id and budget) or a
            (problem_id, instance_id) -> precision mapping
        grid: Regression configurations
        seed: Run seed; each fold derives its own
        target_transform: raw, log or natural_log
        include_best_test: Select Best-test from pooled test residuals
        class_predictor: Replaces the trained classifier for Ensemble-class
        weight_on_validation: Weight members on held-out training instances
        refit_selected: Refit selected configs on the whole training split
        processor: ParallelProcessor for grid fitting
        fold_processor: ParallelProcessor over folds (inline when None)

    Raises:
        DataError: Incomplete or inconsistent input tables
        InternalConsistencyError: Non-finite predictions
    """
    start = time.time()
    mode = normalize_target_mode(target_transform)
    grid = list(grid)
    if isinstance(performance, Mapping):
        targets = performance
    else:
        if algorithm_id is None or budget is None:
            raise ContractError("algorithm_id and budget are required to filter performance records")
        targets = performance_lookup(performance, algorithm_id, budget)

    personalize.check_join(features, targets)
    folds = make_stratified_folds(features.keys)
    if logger_service:
        logger_service.log_stage_start(
            "evaluate",
            f"Evaluating {len(folds.problems)} problems x {folds.k} folds, {len(grid)} configs, target {mode}",
        )

    def run_fold(t: int) -> FoldOutcome:
        return _evaluate_fold(
            t, folds, features, targets, grid, mode, seed, include_best_test,
            class_predictor, weight_on_validation, refit_selected, processor, logger_service,
        )

    if fold_processor is not None:
        outcomes = fold_processor.map_ordered(run_fold, range(folds.k), label="folds")
    else:
        outcomes = [run_fold(t) for t in range(folds.k)]

    report, confusion = _assemble(folds, outcomes, grid, include_best_test)
    report.metadata = dict(metadata or {})
    report.metadata.update({
        "algorithm": algorithm_id,
        "budget": budget,
        "seed": seed,
        "target_transform": mode,
        "n_configs": len(grid),
        "include_best_test": include_best_test,
        "best_test_aggregation": "pooled",
        "weight_on_validation": weight_on_validation,
        "refit_selected": refit_selected,
        "oracle_classifier": class_predictor is not None,
        "accuracy": accuracy(confusion),
    })
    if logger_service:
        logger_service.log_stage_complete(
            "evaluate",
            f"Evaluation finished, classifier accuracy {accuracy(confusion):.3f}",
            time.time() - start,
            len(folds.problems) * folds.k,
        )
    return report, confusion


def _assemble(
    folds: FoldSpec,
    outcomes: List[FoldOutcome],
    grid: List[RMConfig],
    include_best_test: bool,
) -> Tuple[ScenarioReport, ConfusionMatrix]:
    """Single-writer merge of fold outcomes, in fold order."""
    problems = list(folds.problems)
    scenarios = [s for s in SCENARIOS if include_best_test or s != BEST_TEST]
    truths = {pid: [] for pid in problems}
    predictions = {s: {pid: [] for pid in problems} for s in scenarios}
    predicted_classes = {pid: [] for pid in problems}

    best_test_name = None
    best_index = None
    if include_best_test:
        pooled = np.hstack([o.test_residuals for o in outcomes])
        best = select_best_test(grid, pooled)
        best_test_name = best.canonical_name
        best_index = grid.index(best)

    for outcome in outcomes:
        for i, (pid, _) in enumerate(outcome.keys):
            truths[pid].append(float(outcome.truths[i]))
            predicted_classes[pid].append(int(outcome.predicted_classes[i]))
            for s in scenarios:
                if s == BEST_TEST:
                    value = outcome.truths[i] + outcome.test_residuals[best_index, i]
                else:
                    value = outcome.predictions[s][i]
                predictions[s][pid].append(float(value))

    errors = {
        s: {pid: [abs(p - y) for p, y in zip(predictions[s][pid], truths[pid])] for pid in problems}
        for s in scenarios
    }
    if include_best_test:
        # Residuals of the Best-test config are its errors, without re-adding the truth
        errors[BEST_TEST] = {pid: [] for pid in problems}
        for outcome in outcomes:
            for i, (pid, _) in enumerate(outcome.keys):
                errors[BEST_TEST][pid].append(float(abs(outcome.test_residuals[best_index, i])))

    true_all = [pid for o in outcomes for pid, _ in o.keys]
    pred_all = [int(c) for o in outcomes for c in o.predicted_classes]
    labels = sorted(set(problems) | set(pred_all))
    confusion = ConfusionMatrix(
        labels=labels,
        counts=sk_confusion_matrix(true_all, pred_all, labels=labels),
    )
    report = ScenarioReport(
        problems=problems,
        fold_ids=[o.fold for o in outcomes],
        truths=truths,
        predictions=predictions,
        errors=errors,
        predicted_classes=predicted_classes,
        best_train=[o.best_train for o in outcomes],
        best_train_instance=[o.best_train_instance for o in outcomes],
        best_test=best_test_name,
        compositions=[o.composition for o in outcomes],
    )
    return report, confusion


def relative_advantage(cells_a: Dict[int, float], cells_b: Dict[int, float]) -> Dict[int, float]:
    """Per problem, b - a; positive values mean a has the smaller error.

    Raises:
        ContractError: Different problem sets
    """
    if set(cells_a) != set(cells_b):
        raise ContractError(
            f"Problem sets differ: only in a {sorted(set(cells_a) - set(cells_b))}, "
            f"only in b {sorted(set(cells_b) - set(cells_a))}"
        )
    return {pid: float(cells_b[pid]) - float(cells_a[pid]) for pid in sorted(cells_a)}


def win_counts(
    report: ScenarioReport,
    challenger: str,
    baselines: Sequence[str] = (BEST_TRAIN, BEST_TEST),
    statistic: str = "median",
) -> dict:
    """Problems where the challenger's error is strictly below each baseline's.

    Returns:
        {baseline: {"wins": n, "problems": [...]}, "all": {...}} where "all"
        counts problems won against every baseline at once.
    """
    mine = report.cells(challenger, statistic)
    result = {}
    won_all = set(report.problems)
    for baseline in baselines:
        theirs = report.cells(baseline, statistic)
        won = [pid for pid in report.problems if mine[pid] < theirs[pid]]
        result[baseline] = {"wins": len(won), "problems": won}
        won_all &= set(won)
    result["all"] = {"wins": len(won_all), "problems": sorted(won_all)}
    result["total"] = len(report.problems)
    return result


def misclassifications(report: ScenarioReport) -> List[Tuple[int, int, int, int]]:
    """(fold, problem_id, instance_id, predicted_class) for every wrong class."""
    wrong = []
    for t, fold_id in enumerate(report.fold_ids):
        for pid in report.problems:
            predicted = report.predicted_classes[pid][t]
            if predicted != pid:
                wrong.append((fold_id, pid, fold_id, predicted))
    return wrong


def accuracy(confusion: ConfusionMatrix) -> float:
    """trace / total."""
    if confusion.total == 0:
        raise ContractError("Empty confusion matrix")
    return confusion.trace / confusion.total
