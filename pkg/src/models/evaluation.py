"""Fold, scenario report and confusion matrix data models."""
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.errors import ContractError


ENSEMBLE_GROUND = "Ensemble-ground"
ENSEMBLE_CLASS = "Ensemble-class"
BEST_TRAIN = "Best-train"
BEST_TRAIN_INSTANCE = "Best-train-instance"
BEST_TEST = "Best-test"

SCENARIOS = (ENSEMBLE_GROUND, ENSEMBLE_CLASS, BEST_TRAIN, BEST_TRAIN_INSTANCE, BEST_TEST)

# Command-line spelling of each scenario
SCENARIO_KEYS = {
    "ensemble-ground": ENSEMBLE_GROUND,
    "ensemble-class": ENSEMBLE_CLASS,
    "best-train": BEST_TRAIN,
    "best-train-instance": BEST_TRAIN_INSTANCE,
    "best-test": BEST_TEST,
}


def scenario_from_key(key: str) -> str:
    """Map `ensemble-class` style keys (or display names) to scenario names."""
    if key in SCENARIOS:
        return key
    try:
        return SCENARIO_KEYS[key.strip().lower()]
    except KeyError:
        raise ContractError(f"Unknown scenario {key!r}; expected one of {sorted(SCENARIO_KEYS)}")


@dataclass(frozen=True)
class FoldSpec:
    """Instance-stratified folds: fold t holds instance fold_ids[t] of every problem.

    Attributes:
        fold_ids: Instance id defining each fold
        problems: Problem ids present in every fold
    """
    fold_ids: Tuple[int, ...]
    problems: Tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.fold_ids)

    def test_keys(self, fold: int) -> List[Tuple[int, int]]:
        """(problem_id, instance_id) rows held out in one fold."""
        iid = self.fold_ids[fold]
        return [(pid, iid) for pid in self.problems]

    def train_keys(self, fold: int) -> List[Tuple[int, int]]:
        """Rows of the other folds, ordered by (problem_id, instance_id)."""
        held = self.fold_ids[fold]
        return [(pid, iid) for pid in self.problems for iid in self.fold_ids if iid != held]

    def folds(self) -> List[List[Tuple[int, int]]]:
        return [self.test_keys(t) for t in range(self.k)]


@dataclass
class ConfusionMatrix:
    """Counts of (true class, predicted class) over all test folds."""
    labels: List[int]
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if self.counts.shape != (n, n):
            raise ContractError(f"Confusion matrix must be {n} x {n}, got {self.counts.shape}")

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    @property
    def total(self) -> int:
        return int(np.sum(self.counts))

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ConfusionMatrix":
        return cls(labels=[int(c) for c in data["labels"]], counts=np.array(data["counts"]))


def _int_keys(mapping: dict) -> dict:
    return {int(k): v for k, v in mapping.items()}


@dataclass
class ScenarioReport:
    """Per-problem, per-scenario test errors of a cross-validated evaluation.

    Lists indexed by fold hold one entry per fold (each fold contains one
    instance of every problem).

    Attributes:
        problems: Problem ids in ascending order
        fold_ids: Instance id of each fold
        truths: problem -> per-fold transformed target
        predictions: scenario -> problem -> per-fold prediction
        errors: scenario -> problem -> per-fold absolute error
        predicted_classes: problem -> per-fold classifier output
        best_train: per-fold Best-train canonical name
        best_train_instance: per-fold map problem -> canonical name
        best_test: Best-test canonical name (None when disabled)
        compositions: per-fold map class -> [(name, q, weight)]
        metadata: provenance (run config, seeds, aggregation choices)
    """
    problems: List[int]
    fold_ids: List[int]
    truths: Dict[int, List[float]]
    predictions: Dict[str, Dict[int, List[float]]]
    errors: Dict[str, Dict[int, List[float]]]
    predicted_classes: Dict[int, List[int]]
    best_train: List[str]
    best_train_instance: List[Dict[int, str]]
    best_test: object = None
    compositions: List[Dict[int, List[Tuple[str, float, float]]]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def scenarios(self) -> List[str]:
        return [s for s in SCENARIOS if s in self.errors]

    def fold_errors(self, scenario: str, problem_id: int) -> List[float]:
        try:
            return self.errors[scenario][int(problem_id)]
        except KeyError:
            raise ContractError(f"Report has no cell ({problem_id}, {scenario})")

    def median_ae(self, scenario: str, problem_id: int) -> float:
        return float(np.median(self.fold_errors(scenario, problem_id)))

    def mean_ae(self, scenario: str, problem_id: int) -> float:
        return float(np.mean(self.fold_errors(scenario, problem_id)))

    def cells(self, scenario: str, statistic: str = "median") -> Dict[int, float]:
        """problem -> median (or mean) absolute error of one scenario."""
        if statistic not in ("median", "mean"):
            raise ContractError(f"Unknown statistic {statistic!r}")
        stat = self.median_ae if statistic == "median" else self.mean_ae
        return {pid: stat(scenario, pid) for pid in self.problems}

    def to_dict(self) -> dict:
        """Convert to dictionary (JSON keys are strings)."""
        return {
            "problems": list(self.problems),
            "fold_ids": list(self.fold_ids),
            "truths": {str(k): v for k, v in self.truths.items()},
            "predictions": {s: {str(k): v for k, v in cells.items()} for s, cells in self.predictions.items()},
            "errors": {s: {str(k): v for k, v in cells.items()} for s, cells in self.errors.items()},
            "summary": {
                s: {str(pid): {"median_ae": self.median_ae(s, pid), "mean_ae": self.mean_ae(s, pid)}
                    for pid in self.problems}
                for s in self.scenarios
            },
            "predicted_classes": {str(k): v for k, v in self.predicted_classes.items()},
            "best_train": list(self.best_train),
            "best_train_instance": [{str(k): v for k, v in fold.items()} for fold in self.best_train_instance],
            "best_test": self.best_test,
            "compositions": [
                {str(cid): [list(m) for m in members] for cid, members in fold.items()}
                for fold in self.compositions
            ],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioReport":
        """Create ScenarioReport from dictionary."""
        return cls(
            problems=[int(p) for p in data["problems"]],
            fold_ids=[int(f) for f in data["fold_ids"]],
            truths=_int_keys(data["truths"]),
            predictions={s: _int_keys(c) for s, c in data["predictions"].items()},
            errors={s: _int_keys(c) for s, c in data["errors"].items()},
            predicted_classes=_int_keys(data["predicted_classes"]),
            best_train=list(data["best_train"]),
            best_train_instance=[_int_keys(f) for f in data["best_train_instance"]],
            best_test=data.get("best_test"),
            compositions=[
                {int(cid): [tuple(m) for m in members] for cid, members in fold.items()}
                for fold in data.get("compositions", [])
            ],
            metadata=data.get("metadata", {}),
        )


def cells_from_values(problems: Sequence[int], values: Sequence[float]) -> Dict[int, float]:
    """Build a problem -> value cell map from aligned sequences."""
    if len(problems) != len(values):
        raise ContractError("problems and values must align")
    return {int(p): float(v) for p, v in zip(problems, values)}
