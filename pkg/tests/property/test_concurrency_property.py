"""Property tests for parallel task execution.

Property 18: Ordered Parallel Results
For any batch of independent tasks and any worker count, map_ordered SHALL
return results in input order, run every task, and re-raise the first
failure in input order after the batch finishes.
"""
import random
import threading
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings

from src.models.rm_config import RMConfig
from src.services.logger_service import LoggerService
from src.services.parallel_processor import ParallelProcessor
from src.services.tree_models import fit_grid


class TestOrderedParallelResults:
    """Property 18: Ordered Parallel Results"""

    @given(
        items=st.lists(st.integers(min_value=-1000, max_value=1000), max_size=40),
        workers=st.integers(min_value=1, max_value=8),
    )
    @settings(max_examples=50)
    def test_results_follow_input_order(self, items, workers):
        """Results SHALL align with inputs regardless of completion order."""
        def task(x):
            time.sleep(random.random() * 0.001)
            return x * x

        assert ParallelProcessor(workers).map_ordered(task, items) == [x * x for x in items]

    @given(
        n=st.integers(min_value=2, max_value=20),
        failing=st.sets(st.integers(min_value=0, max_value=19), min_size=1),
        workers=st.integers(min_value=1, max_value=6),
    )
    @settings(max_examples=50)
    def test_first_failure_in_input_order_is_raised(self, n, failing, workers):
        """Every task SHALL run, then the earliest failing input's error SHALL be raised."""
        failing = {i for i in failing if i < n}
        if not failing:
            failing = {n - 1}
        ran = []
        lock = threading.Lock()

        def task(i):
            with lock:
                ran.append(i)
            if i in failing:
                raise ValueError(f"task {i}")
            return i

        with pytest.raises(ValueError) as exc_info:
            ParallelProcessor(workers).map_ordered(task, range(n))
        assert str(exc_info.value) == f"task {min(failing)}"
        assert sorted(ran) == list(range(n))

    def test_failure_is_logged(self):
        """A failed batch SHALL leave a WARNING entry summarising the error count."""
        logger_service = LoggerService()

        def task(i):
            if i % 2:
                raise RuntimeError("boom")
            return i

        with pytest.raises(RuntimeError):
            ParallelProcessor(3, logger_service, operation_type="train").map_ordered(task, range(4), label="fits")
        warnings = [e for e in logger_service.get_recent_logs() if e.level == "WARNING"]
        assert len(warnings) == 1
        assert warnings[0].operation_type == "train"
        assert warnings[0].message.startswith("2/4 fits failed")

    def test_grid_fit_is_independent_of_worker_count(self):
        """Fitting a grid on 1 or 4 workers SHALL give identical predictions."""
        rng = np.random.default_rng(3)
        X = rng.normal(size=(40, 3))
        y = X[:, 0] * 2.0 + rng.normal(scale=0.1, size=40)
        grid = [
            RMConfig("DecisionTree", "mse", 2),
            RMConfig("RandomForest", "mse", 4, 10),
            RMConfig("BaggingDT", "mae", 2, 10),
        ]
        inline = fit_grid(X, y, grid, 5, ParallelProcessor(1))
        threaded = fit_grid(X, y, grid, 5, ParallelProcessor(4))
        assert list(inline) == list(threaded) == [c.canonical_name for c in grid]
        for name in inline:
            np.testing.assert_array_equal(inline[name].predict_batch(X), threaded[name].predict_batch(X))
