"""Property tests for the benchmark suite.

Property 10: Optimum At Shift
For any catalog function and instance, the value at the instance shift
SHALL equal the optimum (0) within 1e-10, and no sampled point SHALL fall
below it.

Property 11: Rotation Orthogonality
For any rotation seed, R^T R SHALL equal I within 1e-10.

Property 12: Instance Determinism
The same (function_id, instance_id, dim, seed) SHALL always yield the same
instance and design set.
"""
import numpy as np
from hypothesis import given, strategies as st, settings

from src.services.problem_suite import (
    evaluate,
    get_function,
    instantiate,
    optimum_value,
    rotation_matrix,
    uniform_sample,
)


@st.composite
def instance_args(draw):
    function_id = draw(st.integers(min_value=1, max_value=24))
    dim = draw(st.integers(min_value=get_function(function_id).min_dim, max_value=6))
    instance_id = draw(st.integers(min_value=0, max_value=10))
    return function_id, instance_id, dim


class TestOptimumAtShift:
    """Property 10: Optimum At Shift"""

    @given(args=instance_args())
    @settings(max_examples=200)
    def test_value_at_shift_is_optimum(self, args):
        """f(shift) SHALL equal the optimum value."""
        inst = instantiate(*args)
        assert abs(evaluate(inst, inst.shift) - optimum_value(inst)) <= 1e-10

    @given(args=instance_args(), seed=st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=100)
    def test_no_sample_below_optimum(self, args, seed):
        """Every sampled fitness SHALL be >= the optimum (up to rounding)."""
        inst = instantiate(*args)
        ds = uniform_sample(inst, 50, seed)
        assert np.all(ds.fitness >= optimum_value(inst) - 1e-10)

    @given(args=instance_args())
    @settings(max_examples=100)
    def test_shift_strictly_inside_bounds(self, args):
        """The shift SHALL lie strictly inside the box."""
        inst = instantiate(*args)
        assert np.all(inst.shift > inst.lower) and np.all(inst.shift < inst.upper)


class TestRotationOrthogonality:
    """Property 11: Rotation Orthogonality"""

    @given(
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        dim=st.integers(min_value=1, max_value=10),
    )
    @settings(max_examples=100)
    def test_rotation_is_orthogonal(self, seed, dim):
        """R^T R SHALL be the identity within 1e-10."""
        r = rotation_matrix(seed, dim)
        assert np.max(np.abs(r.T @ r - np.eye(dim))) < 1e-10


class TestInstanceDeterminism:
    """Property 12: Instance Determinism"""

    @given(args=instance_args(), seed=st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=50)
    def test_same_inputs_same_design_set(self, args, seed):
        """Repeated instantiation and sampling SHALL be bitwise identical."""
        a = instantiate(*args)
        b = instantiate(*args)
        np.testing.assert_array_equal(a.shift, b.shift)
        np.testing.assert_array_equal(a.rotation, b.rotation)
        assert a.rotation_seed == b.rotation_seed
        first = uniform_sample(a, 50, seed)
        second = uniform_sample(b, 50, seed)
        np.testing.assert_array_equal(first.points, second.points)
        np.testing.assert_array_equal(first.fitness, second.fitness)
        assert np.all(first.points >= -5.0) and np.all(first.points <= 5.0)
