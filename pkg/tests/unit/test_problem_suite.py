"""Catalog lookups, instance construction and sampling."""
import numpy as np
import pytest

from src.errors import ContractError
from src.services.problem_suite import (
    CatalogError,
    build_suite,
    catalog,
    design_set_table,
    evaluate,
    evaluate_batch,
    get_function,
    instantiate,
    optimum_value,
    uniform_sample,
)


class TestCatalog:

    def test_twenty_four_entries(self):
        entries = catalog()
        assert [f.function_id for f in entries] == list(range(1, 25))
        assert entries[0].name == "Sphere"

    @pytest.mark.parametrize("function_id", [0, 25, "x", None])
    def test_unknown_id(self, function_id):
        with pytest.raises(CatalogError):
            get_function(function_id)

    def test_minimum_dimension(self):
        with pytest.raises(CatalogError):
            instantiate(8, 1, 1)
        assert instantiate(8, 1, 2).dim == 2

    def test_invalid_arguments(self):
        with pytest.raises(ContractError):
            instantiate(1, -1, 2)
        with pytest.raises(ContractError):
            instantiate(1, 1, 0)


class TestInstances:

    def test_untransformed_sphere(self):
        inst = instantiate(1, 0, 2)
        assert evaluate(inst, [3.0, 4.0]) == 25.0
        assert optimum_value(inst) == 0.0

    def test_instances_differ(self):
        a, b = instantiate(15, 1, 3), instantiate(15, 2, 3)
        assert not np.array_equal(a.shift, b.shift)
        assert a.rotation_seed != b.rotation_seed

    def test_separable_functions_are_not_rotated(self):
        np.testing.assert_array_equal(instantiate(3, 4, 3).rotation, np.eye(3))

    def test_dimension_checked(self):
        inst = instantiate(1, 1, 3)
        with pytest.raises(ContractError):
            evaluate(inst, [0.0, 0.0])
        with pytest.raises(ContractError):
            evaluate_batch(inst, np.zeros((4, 2)))


class TestSampling:

    def test_sample_size_and_bounds(self):
        inst = instantiate(6, 1, 3)
        ds = uniform_sample(inst, 50, seed=4)
        assert ds.points.shape == (150, 3)
        assert np.all(ds.points >= inst.lower) and np.all(ds.points <= inst.upper)
        np.testing.assert_allclose(ds.fitness, evaluate_batch(inst, ds.points))

    def test_seeded(self):
        inst = instantiate(6, 1, 2)
        np.testing.assert_array_equal(uniform_sample(inst, 50, 4).points, uniform_sample(inst, 50, 4).points)
        assert not np.array_equal(uniform_sample(inst, 50, 4).points, uniform_sample(inst, 50, 5).points)

    def test_suite_and_table(self):
        suite = build_suite([1, 2], [1, 2, 3], 2)
        assert [inst.key for inst in suite] == [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]
        frame = design_set_table([uniform_sample(suite[0], 50, 1)])
        assert len(frame) == 100
        assert list(frame.columns[:4]) == ["problem_id", "instance_id", "dim", "seed"]
        assert list(frame.columns[-1:]) == ["fitness"]
