"""Property tests for ensemble predictions.

Property 19: Ensemble Convexity
Every forest prediction SHALL lie within the range of its trees'
predictions, and every personalized prediction within the range of its
class members' predictions.

Property 20: Monotone Minsplit
The training MSE of a single mse tree SHALL be non-decreasing in minsplit.

Property 21: Ground/Class Path Equivalence
Whenever the classifier returns the true class, predict SHALL equal
predict_with_known_class exactly.
"""
import numpy as np
from hypothesis import given, strategies as st, settings

from src.models.rm_config import MINSPLIT_GRID, RMConfig
from src.services.personalize import predict, predict_with_known_class, train_personalized
from src.services.tree_models import fit_forest, fit_tree_regressor
from tests.conftest import make_synthetic_table


TRAINED = {}


def trained_model(seed: int):
    """Personalized model on the synthetic table, cached per seed."""
    if seed not in TRAINED:
        features, targets = make_synthetic_table(seed=seed)
        grid = [
            RMConfig("DecisionTree", "mse", 2),
            RMConfig("DecisionTree", "mae", 4),
            RMConfig("RandomForest", "mse", 2, 10),
            RMConfig("BaggingDT", "mse", 2, 10),
        ]
        TRAINED[seed] = (features, train_personalized(features, targets, None, grid, "log", seed=seed))
    return TRAINED[seed]


class TestEnsembleConvexity:
    """Property 19: Ensemble Convexity"""

    @given(
        seed=st.integers(min_value=0, max_value=2**31 - 1),
        technique=st.sampled_from(["RandomForest", "BaggingDT"]),
        crit=st.sampled_from(["mse", "mae"]),
    )
    @settings(max_examples=30)
    def test_forest_within_tree_range(self, seed, technique, crit):
        """Forest predictions SHALL lie in [min, max] of the tree predictions."""
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(25, 3))
        y = rng.normal(size=25)
        model = fit_forest(X, y, RMConfig(technique, crit, 2, 10), seed)
        queries = rng.normal(scale=2.0, size=(30, 3))
        per_tree = model.tree_predictions(queries)
        predicted = model.predict_batch(queries)
        assert np.all(predicted >= per_tree.min(axis=0) - 1e-12)
        assert np.all(predicted <= per_tree.max(axis=0) + 1e-12)

    @given(seed=st.sampled_from([1, 2, 3]), query_seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=20)
    def test_personalized_within_member_range(self, seed, query_seed):
        """Class ensemble predictions SHALL lie in the hull of their members."""
        features, model = trained_model(seed)
        queries = np.random.default_rng(query_seed).normal(loc=15.0, scale=10.0, size=(10, 3))
        for cid in model.classes:
            ensemble = model.ensemble(cid)
            members = ensemble.member_predictions(queries)
            predicted = ensemble.predict_batch(queries)
            span = np.max(np.abs(members)) + 1.0
            assert np.all(predicted >= members.min(axis=0) - 1e-12 * span)
            assert np.all(predicted <= members.max(axis=0) + 1e-12 * span)


class TestMonotoneMinsplit:
    """Property 20: Monotone Minsplit"""

    @given(seed=st.integers(min_value=0, max_value=2**31 - 1), n=st.integers(min_value=5, max_value=40))
    @settings(max_examples=30)
    def test_training_mse_non_decreasing(self, seed, n):
        """Raising minsplit SHALL never lower the training MSE."""
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, 2))
        y = rng.normal(size=n)
        errors = []
        for minsplit in MINSPLIT_GRID:
            model = fit_tree_regressor(X, y, "mse", minsplit, seed)
            errors.append(float(np.mean((model.predict_batch(X) - y) ** 2)))
        assert all(b >= a - 1e-12 for a, b in zip(errors, errors[1:]))


class TestGroundClassPathEquivalence:
    """Property 21: Ground/Class Path Equivalence"""

    @given(seed=st.sampled_from([1, 2, 3]))
    @settings(max_examples=3)
    def test_correct_class_gives_identical_prediction(self, seed):
        """predict SHALL equal predict_with_known_class whenever the class is right."""
        features, model = trained_model(seed)
        checked = 0
        for key in features.keys:
            row = features.row(key)
            y, predicted_class = predict(model, row)
            if predicted_class == key[0]:
                assert y == predict_with_known_class(model, row, key[0])
                checked += 1
        assert checked > 0
