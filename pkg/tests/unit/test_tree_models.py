"""CART split search and the voting classifier ensemble."""
import numpy as np
import pytest

from src.errors import ContractError
from src.models.rm_config import DEFAULT_CLASSIFIER_MEMBERS
from src.models.tree import ClassifierEnsemble, majority_vote
from src.services import cart
from src.services.cart import CartBuilder, midpoint
from src.services.tree_models import fit_classifier_ensemble, predict_class, predict_class_batch


CROSSED_X = np.array([[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]])


def distinct_rows(n_labels=24, per_label=5, width=56, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_labels * per_label, width))
    labels = np.repeat(np.arange(1, n_labels + 1), per_label)
    return X, labels


class TestCartBuilder:

    def test_midpoint_stays_below_upper_value(self):
        assert midpoint(1.0, 2.0) == 1.5
        upper = np.nextafter(1.0, 2.0)
        assert 1.0 <= midpoint(1.0, upper) < upper

    def test_classification_ties_take_smallest_feature_and_threshold(self):
        tree = CartBuilder("gini", 2).build_tree(CROSSED_X, [0, 1, 1, 0])
        assert tree.feature.tolist() == [0, -2, 0, -2, -2]
        assert tree.threshold.tolist() == [0.5, -2.0, 2.5, -2.0, -2.0]
        assert tree.value.tolist() == [0.0, 0.0, 1.0, 1.0, 0.0]

    def test_absolute_deviation_scores(self):
        ys = np.random.default_rng(1).integers(-20, 20, size=(9, 4)).astype(float)
        scores = cart._sad_scores(ys)
        for f in range(4):
            for k in range(1, 9):
                left, right = ys[:k, f], ys[k:, f]
                expected = np.abs(left - np.median(left)).sum() + np.abs(right - np.median(right)).sum()
                assert scores[k - 1, f] == pytest.approx(expected)

    def test_absolute_deviation_blocks(self, monkeypatch):
        ys = np.random.default_rng(2).normal(size=(7, 5))
        whole = cart._sad_scores(ys)
        monkeypatch.setattr(cart, "SAD_BLOCK_ELEMENTS", 1)
        np.testing.assert_array_equal(cart._sad_scores(ys), whole)

    def test_few_varying_features_leave_stream_untouched(self):
        X = np.zeros((6, 5))
        X[:, 1] = np.arange(6)
        X[:, 3] = np.arange(6)[::-1]
        rng = np.random.default_rng(0)
        state = rng.bit_generator.state
        builder = CartBuilder("mse", 2, max_features=2, rng=rng)
        assert builder._candidate_features(X).tolist() == [1, 3]
        assert rng.bit_generator.state == state

    def test_feature_draws_are_sorted_varying_subsets(self):
        X = np.random.default_rng(3).normal(size=(8, 6))
        X[:, 2] = 1.0
        builder = CartBuilder("mse", 2, max_features=3, rng=np.random.default_rng(4))
        drawn = builder._candidate_features(X).tolist()
        assert len(drawn) == 3
        assert drawn == sorted(drawn)
        assert 2 not in drawn

    def test_invalid_arguments(self):
        with pytest.raises(ContractError):
            CartBuilder("variance", 2)
        with pytest.raises(ContractError):
            CartBuilder("mse", 1)
        with pytest.raises(ContractError):
            CartBuilder("mse", 2, max_features=2)
        with pytest.raises(ContractError):
            CartBuilder("gini", 2, classes=[0, 1]).build_tree(CROSSED_X, [0, 1, 2, 0])


class TestClassifierEnsemble:

    def test_members(self):
        X, labels = distinct_rows(n_labels=4, per_label=3, width=5)
        ens = fit_classifier_ensemble(X, labels, 7)
        assert len(ens.members) == 3
        assert [m.config for m in ens.members] == list(DEFAULT_CLASSIFIER_MEMBERS)
        for member in ens.members:
            assert member.config.minsplit == 2
            assert len(member.trees) == member.config.nest == 9
        assert ens.labels == (1, 2, 3, 4)
        assert ens.bootstrap is False

    def test_training_rows_classified_exactly(self):
        X, labels = distinct_rows()
        ens = fit_classifier_ensemble(X, labels, 11)
        np.testing.assert_array_equal(predict_class_batch(ens, X), labels)
        assert predict_class(ens, X[17]) == labels[17]

    def test_fixed_seed_is_deterministic(self):
        X, labels = distinct_rows(n_labels=6, per_label=4, width=10)
        assert fit_classifier_ensemble(X, labels, 5).to_dict() == fit_classifier_ensemble(X, labels, 5).to_dict()

    def test_bootstrap_option(self):
        X, labels = distinct_rows(n_labels=6, per_label=4, width=10)
        first = fit_classifier_ensemble(X, labels, 5, bootstrap=True)
        second = fit_classifier_ensemble(X, labels, 5, bootstrap=True)
        assert first.bootstrap is True
        assert first.to_dict() == second.to_dict()
        reloaded = ClassifierEnsemble.from_dict(first.to_dict())
        assert reloaded.bootstrap is True
        np.testing.assert_array_equal(reloaded.predict_batch(X), first.predict_batch(X))

    def test_single_label_rejected(self):
        with pytest.raises(ContractError):
            fit_classifier_ensemble(np.eye(3), [4, 4, 4], 0)

    def test_member_votes(self):
        assert majority_vote(np.array([[3], [3], [7]])).tolist() == [3]
        assert majority_vote(np.array([[5], [5], [5]])).tolist() == [5]
        assert majority_vote(np.array([[3], [1], [2]])).tolist() == [1]
        assert majority_vote(np.array([[2, 5], [2, 4], [1, 4]])).tolist() == [2, 4]
