"""Pytest configuration and fixtures."""
import os
import threading
from collections.abc import Mapping

import numpy as np
import pytest
from hypothesis import settings

from src.models.feature_vector import FeatureTable
from src.models.rm_config import RMConfig
from src.services.logger_service import LoggerService

# Hypothesis profiles
settings.register_profile("ci", max_examples=100, deadline=None)
settings.register_profile("dev", max_examples=10, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


ELAPP_VARS = [
    "ELAPP_ALGORITHM", "ELAPP_BUDGET", "ELAPP_MULTIPLIER", "ELAPP_ALLOW_ANY_MULTIPLIER",
    "ELAPP_DIM", "ELAPP_INSTANCES", "ELAPP_FUNCTIONS", "ELAPP_TARGET", "ELAPP_GRID",
    "ELAPP_SEED", "ELAPP_FEATURE_SEED", "ELAPP_FIT_WORKERS", "ELAPP_FOLD_WORKERS",
    "ELAPP_OUTPUT_DIR", "ELAPP_LOG_PATH", "ELAPP_WEIGHT_ON_VALIDATION",
    "ELAPP_REFIT_SELECTED", "ELAPP_DEBUG",
]


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """No ELAPP_* variables and no .env file in the working directory."""
    for name in ELAPP_VARS:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    return monkeypatch


def make_synthetic_table(n_problems: int = 3, n_instances: int = 5, seed: int = 7):
    """Separable features and class-dependent targets.

    Feature 0 encodes the problem; feature 1 varies per instance; feature 2
    is noise. Targets are positive precisions following a different rule
    per problem.
    """
    rng = np.random.default_rng(seed)
    keys, rows, targets = [], [], {}
    for pid in range(1, n_problems + 1):
        for iid in range(1, n_instances + 1):
            x1 = iid + rng.uniform(-0.2, 0.2)
            rows.append([10.0 * pid + rng.uniform(-0.5, 0.5), x1, rng.uniform(0.0, 1.0)])
            keys.append((pid, iid))
            if pid % 2:
                targets[(pid, iid)] = float(np.exp(pid + (1.0 if x1 > 3 else -1.0)))
            else:
                targets[(pid, iid)] = float(np.exp(0.5 * pid + 0.3 * x1))
    table = FeatureTable(names=["f_class", "f_instance", "f_noise"], keys=keys, matrix=np.array(rows))
    return table, targets


@pytest.fixture
def synthetic_data():
    return make_synthetic_table()


@pytest.fixture
def tiny_grid():
    """Two configurations per technique."""
    return [
        RMConfig("DecisionTree", "mse", 2),
        RMConfig("DecisionTree", "mae", 4),
        RMConfig("RandomForest", "mse", 2, 10),
        RMConfig("RandomForest", "mae", 4, 10),
        RMConfig("BaggingDT", "mse", 2, 10),
        RMConfig("BaggingDT", "mae", 4, 10),
    ]


class EventLog:
    """Ordered record of logger events and target reads, shared across threads."""

    def __init__(self):
        self.events = []
        self._lock = threading.Lock()

    def add(self, event):
        with self._lock:
            self.events.append(event)


class RecordingLogger(LoggerService):
    """LoggerService that mirrors every entry into an EventLog."""

    def __init__(self, event_log: EventLog):
        super().__init__()
        self.event_log = event_log

    def log(self, level, message, **kwargs):
        entry = super().log(level, message, **kwargs)
        self.event_log.add(("log", entry.operation_type, entry.status, entry.fold))
        return entry


class TrackingTargets(Mapping):
    """Target mapping that records every value read."""

    def __init__(self, targets: dict, event_log: EventLog):
        self._targets = dict(targets)
        self.event_log = event_log

    def __getitem__(self, key):
        value = self._targets[key]
        self.event_log.add(("read", key))
        return value

    def __iter__(self):
        return iter(self._targets)

    def __len__(self):
        return len(self._targets)

    def __contains__(self, key):
        return key in self._targets


@pytest.fixture
def event_log():
    return EventLog()
