"""Property tests for generated performance data.

Property 15: Precision Monotonicity
For any instance, optimizer and seed, the target precision SHALL be
nonnegative and non-increasing in the budget, and reruns SHALL reproduce it.
"""
import numpy as np
from hypothesis import given, strategies as st, settings

from src.services.performance_generator import (
    ONE_PLUS_ONE_ES,
    RANDOM_SEARCH,
    generate_performance,
    precision_at_budgets,
)
from src.services.problem_suite import instantiate


budgets_strategy = st.lists(st.integers(min_value=1, max_value=300), min_size=1, max_size=5, unique=True)


class TestPrecisionMonotonicity:
    """Property 15: Precision Monotonicity"""

    @given(
        function_id=st.sampled_from([1, 3, 6, 10, 15, 20, 21, 24]),
        optimizer=st.sampled_from([RANDOM_SEARCH, ONE_PLUS_ONE_ES]),
        budgets=budgets_strategy,
        seed=st.integers(min_value=0, max_value=2**31 - 1),
    )
    @settings(max_examples=50)
    def test_precision_non_increasing(self, function_id, optimizer, budgets, seed):
        """Precision SHALL never grow with the budget."""
        inst = instantiate(function_id, 1, 2)
        records = generate_performance([inst], optimizer, budgets, seed)
        assert [r.budget for r in records] == sorted(budgets)
        precisions = [r.target_precision for r in records]
        assert all(p >= 0.0 for p in precisions)
        assert all(b <= a for a, b in zip(precisions, precisions[1:]))

    @given(
        optimizer=st.sampled_from([RANDOM_SEARCH, ONE_PLUS_ONE_ES]),
        seed=st.integers(min_value=0, max_value=2**31 - 1),
    )
    @settings(max_examples=25)
    def test_reruns_reproduce(self, optimizer, seed):
        """The same seed SHALL reproduce every record."""
        suite = [instantiate(1, 1, 2), instantiate(1, 2, 2)]
        first = generate_performance(suite, optimizer, [250, 1000], seed)
        second = generate_performance(suite, optimizer, [250, 1000], seed)
        assert first == second

    @given(trace=st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=1, max_size=50))
    @settings(max_examples=100)
    def test_precision_is_best_so_far(self, trace):
        """Precision at budget b SHALL equal min(trace[:b])."""
        budgets = list(range(1, len(trace) + 1))
        expected = [min(trace[:b]) for b in budgets]
        np.testing.assert_array_equal(precision_at_budgets(np.array(trace), 0.0, budgets), expected)
