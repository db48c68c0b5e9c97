"""Cross-validated evaluation on the synthetic table."""
import numpy as np
import pytest

from src.errors import DataError
from src.models.feature_vector import FeatureTable
from src.models.rm_config import RMConfig
from src.models.evaluation import (
    BEST_TEST,
    BEST_TRAIN,
    ENSEMBLE_CLASS,
    ENSEMBLE_GROUND,
    SCENARIOS,
)
from src.services.evaluation import accuracy, oracle_class_predictor, run_evaluation
from src.services.logger_service import LoggerService
from src.services.parallel_processor import ParallelProcessor
from tests.conftest import RecordingLogger, TrackingTargets


@pytest.fixture
def evaluated(synthetic_data, tiny_grid):
    features, targets = synthetic_data
    logger_service = LoggerService()
    report, confusion = run_evaluation(
        features, targets, tiny_grid, seed=5, target_transform="log", logger_service=logger_service
    )
    return report, confusion, logger_service


class TestEvaluation:

    def test_every_scenario_has_every_fold(self, evaluated):
        report, confusion, _ = evaluated
        assert report.scenarios == list(SCENARIOS)
        assert report.problems == [1, 2, 3]
        assert report.fold_ids == [1, 2, 3, 4, 5]
        for scenario in SCENARIOS:
            for pid in report.problems:
                errors = report.fold_errors(scenario, pid)
                assert len(errors) == 5
                assert all(np.isfinite(e) and e >= 0.0 for e in errors)
        assert confusion.total == 15
        assert report.metadata["best_test_aggregation"] == "pooled"
        assert report.metadata["target_transform"] == "natural_log"
        assert report.best_test is not None

    def test_errors_match_predictions(self, evaluated):
        report, _, _ = evaluated
        for scenario in SCENARIOS:
            for pid in report.problems:
                expected = np.abs(np.array(report.predictions[scenario][pid]) - np.array(report.truths[pid]))
                np.testing.assert_allclose(report.errors[scenario][pid], expected)

    def test_truths_are_log_targets(self, synthetic_data, evaluated):
        _, targets = synthetic_data
        report, _, _ = evaluated
        for t, fold_id in enumerate(report.fold_ids):
            assert report.truths[2][t] == pytest.approx(np.log(targets[(2, fold_id)]))

    def test_one_composition_per_fold(self, evaluated):
        report, _, _ = evaluated
        assert len(report.compositions) == 5
        for composition in report.compositions:
            assert sorted(composition) == [1, 2, 3]
            for members in composition.values():
                assert len(members) == 3
                assert sum(weight for _, _, weight in members) == pytest.approx(1.0)

    def test_fold_logs(self, evaluated):
        _, _, logger_service = evaluated
        folds = [e for e in logger_service.get_recent_logs(500) if e.status == "success" and e.fold is not None]
        assert [e.fold for e in folds] == [1, 2, 3, 4, 5]
        assert all(e.records_count == 3 for e in folds)

    def test_classifier_gate_on_separable_features(self, evaluated):
        report, confusion, _ = evaluated
        assert accuracy(confusion) == report.metadata["accuracy"]
        assert accuracy(confusion) >= 0.8

    def test_oracle_classifier(self, synthetic_data, tiny_grid):
        features, targets = synthetic_data
        report, confusion = run_evaluation(
            features, targets, tiny_grid, seed=5, class_predictor=oracle_class_predictor
        )
        assert accuracy(confusion) == 1.0
        assert report.errors[ENSEMBLE_CLASS] == report.errors[ENSEMBLE_GROUND]
        assert report.metadata["oracle_classifier"] is True

    def test_without_best_test(self, synthetic_data, tiny_grid):
        features, targets = synthetic_data
        report, _ = run_evaluation(features, targets, tiny_grid, seed=5, include_best_test=False)
        assert BEST_TEST not in report.scenarios
        assert report.best_test is None
        assert BEST_TRAIN in report.scenarios

    def test_deterministic(self, synthetic_data, tiny_grid, evaluated):
        features, targets = synthetic_data
        report, _, _ = evaluated
        again, _ = run_evaluation(features, targets, tiny_grid, seed=5, target_transform="log")
        assert again.to_dict() == report.to_dict()

    def test_parallel_folds_match_inline(self, synthetic_data, tiny_grid, evaluated):
        features, targets = synthetic_data
        report, _, _ = evaluated
        parallel, _ = run_evaluation(
            features, targets, tiny_grid, seed=5, target_transform="log",
            processor=ParallelProcessor(2), fold_processor=ParallelProcessor(3),
        )
        assert parallel.to_dict() == report.to_dict()

    def test_validation_weighting(self, synthetic_data, tiny_grid):
        features, targets = synthetic_data
        report, _ = run_evaluation(features, targets, tiny_grid, seed=5, weight_on_validation=True)
        assert report.metadata["weight_on_validation"] is True
        assert all(len(report.fold_errors(ENSEMBLE_GROUND, pid)) == 5 for pid in report.problems)

    def test_missing_target_rejected(self, synthetic_data, tiny_grid):
        features, targets = synthetic_data
        partial = {k: v for k, v in targets.items() if k != (2, 3)}
        with pytest.raises(DataError) as exc_info:
            run_evaluation(features, partial, tiny_grid, seed=5)
        assert (2, 3) in exc_info.value.keys


class TestHeldOutTargets:
    """Held-out targets are read only after the fold's predictions exist."""

    def test_no_test_target_read_before_predictions(self, synthetic_data, tiny_grid, event_log):
        features, targets = synthetic_data
        tracking = TrackingTargets(targets, event_log)
        run_evaluation(
            features, tracking, tiny_grid, seed=5, include_best_test=False,
            logger_service=RecordingLogger(event_log),
        )
        events = event_log.events
        starts = [
            i for i, e in enumerate(events)
            if e[0] == "log" and e[1] == "evaluate" and e[2] == "in_progress" and e[3] is not None
        ]
        assert len(starts) == 5
        for n, begin in enumerate(starts):
            end = starts[n + 1] if n + 1 < len(starts) else len(events)
            segment = events[begin:end]
            fold_id = segment[0][3]
            ready = next(
                i for i, e in enumerate(segment) if e[0] == "log" and e[2] == "predicted" and e[3] == fold_id
            )
            early_reads = [e[1] for e in segment[:ready] if e[0] == "read"]
            late_reads = [e[1] for e in segment[ready:] if e[0] == "read"]
            assert early_reads
            assert all(key[1] != fold_id for key in early_reads)
            assert sorted(late_reads) == [(pid, fold_id) for pid in (1, 2, 3)]


def crossed_classes():
    """A step-shaped problem and a smooth one over nine instances.

    Features are the class marker and the instance position; the step
    problem jumps from 100 to 110 after position 5, the smooth one equals
    its position.
    """
    keys = [(pid, t) for pid in (1, 2) for t in range(1, 10)]
    matrix = np.array([[10.0 * pid, float(t)] for pid, t in keys])
    targets = {(1, t): (100.0 if t <= 5 else 110.0) for t in range(1, 10)}
    targets.update({(2, t): float(t) for t in range(1, 10)})
    return FeatureTable(names=["f_class", "f_position"], keys=keys, matrix=matrix), targets


CROSSED_GRID = [
    RMConfig("DecisionTree", "mse", 2),
    RMConfig("RandomForest", "mse", 2, 20),
    RMConfig("RandomForest", "mse", 2, 30),
    RMConfig("BaggingDT", "mse", 2, 20),
    RMConfig("BaggingDT", "mse", 2, 30),
]


class TestCrossedClasses:
    """The single tree fits the step problem and lags one position on the smooth one."""

    @pytest.fixture(scope="class")
    def crossed(self):
        features, targets = crossed_classes()
        return run_evaluation(
            features, targets, CROSSED_GRID, seed=2, target_transform="raw", include_best_test=False
        )

    def test_best_train_is_the_exact_tree(self, crossed):
        report, confusion = crossed
        assert set(report.best_train) == {"DecisionTree_crit-mse_minsplit-2"}
        assert accuracy(confusion) == 1.0

    def test_tree_lags_smooth_problem(self, crossed):
        report, _ = crossed
        np.testing.assert_allclose(report.fold_errors(BEST_TRAIN, 2), np.ones(9))
        assert report.median_ae(BEST_TRAIN, 1) == 0.0

    def test_ensemble_beats_best_train_on_smooth_problem(self, crossed):
        report, _ = crossed
        assert report.median_ae(ENSEMBLE_GROUND, 2) < report.median_ae(BEST_TRAIN, 2)
        assert report.median_ae(ENSEMBLE_CLASS, 2) < report.median_ae(BEST_TRAIN, 2)
        assert report.median_ae(ENSEMBLE_GROUND, 1) <= 10.0
