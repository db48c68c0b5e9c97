"""Hand-computed values for the landscape feature groups."""
import math

import numpy as np
import pytest
from sklearn.discriminant_analysis import LinearDiscriminantAnalysis, QuadraticDiscriminantAnalysis
from sklearn.model_selection import StratifiedKFold

from src.models.benchmark import DesignSet
from src.models.feature_vector import FeatureConfig
from src.services.ela_features import (
    DegenerateInputError,
    _mmce_ratio,
    disp_group,
    ela_level_group,
    ela_meta_group,
    feature_names,
    ic_group,
    nbc_group,
    nearest_better_distances,
    nearest_neighbor_tour,
)


def line_design(fitness):
    fitness = np.asarray(fitness, dtype=float)
    points = np.arange(fitness.size, dtype=float).reshape(-1, 1)
    return DesignSet(points=points, fitness=fitness, problem_id=1, instance_id=1, seed=0)


def meta_features(ds):
    names = [n for n in feature_names() if n.startswith("ela_meta.")]
    return dict(zip(names, ela_meta_group(ds)))


class TestDispersion:

    def test_line_sample(self):
        # best two of 0..4 are 0 and 1; mean pairwise distance of 0..4 is 2
        values = disp_group(line_design([0, 1, 2, 3, 4]), [0.4])
        np.testing.assert_allclose(values, [0.5, 0.5, -1.0, -1.0])

    def test_coincident_points_rejected(self):
        ds = DesignSet(points=np.zeros((5, 2)), fitness=np.arange(5.0))
        with pytest.raises(DegenerateInputError) as exc_info:
            disp_group(ds, [0.4])
        assert exc_info.value.group == "disp"

    def test_too_small_subset_rejected(self):
        with pytest.raises(DegenerateInputError):
            disp_group(line_design([0, 1, 2, 3, 4]), [0.1])


class TestMetaModel:

    def test_exact_linear_fitness(self):
        values = ela_meta_group(line_design([3 + 2 * x for x in range(6)]))
        names = [n for n in feature_names() if n.startswith("ela_meta.")]
        features = dict(zip(names, values))
        assert features["ela_meta.lin_simple.adj_r2"] == pytest.approx(1.0)
        assert features["ela_meta.lin_simple.intercept"] == pytest.approx(3.0)
        assert features["ela_meta.lin_simple.coef.max"] == pytest.approx(2.0)
        assert features["ela_meta.quad_simple.adj_r2"] == pytest.approx(1.0)

    def test_pure_quadratic_fitness(self):
        features = meta_features(line_design([(x - 3) ** 2 for x in range(7)]))
        assert features["ela_meta.quad_simple.adj_r2"] == pytest.approx(1.0)
        assert features["ela_meta.quad_w_interact.adj_r2"] == pytest.approx(1.0)
        assert features["ela_meta.quad_simple.cond"] == 1.0

    def test_constant_fitness(self):
        features = meta_features(line_design([5.0] * 7))
        for model in ("lin_simple", "lin_w_interact", "quad_simple", "quad_w_interact"):
            assert features[f"ela_meta.{model}.adj_r2"] == 0.0
        assert features["ela_meta.lin_simple.intercept"] == pytest.approx(5.0)
        assert features["ela_meta.lin_simple.coef.max_by_min"] == 1.0

    def test_too_few_points(self):
        with pytest.raises(DegenerateInputError):
            ela_meta_group(line_design([0, 1, 2]))


class TestLevelSets:

    def test_separable_clusters(self):
        i = np.arange(10)
        near = np.column_stack([i * 0.1, (i % 3) * 0.1])
        ds = DesignSet(
            points=np.vstack([near, near + 10.0]),
            fitness=np.concatenate([i, 100.0 + i]).astype(float),
        )
        np.testing.assert_array_equal(ela_level_group(ds, [0.5], 0), [0, 0, 0, 1, 1, 1, 0])

    def test_error_ratio(self):
        assert _mmce_ratio(0.2, 0.2, 20) == 1.0
        assert _mmce_ratio(0.1, 0.2, 20) == pytest.approx(0.5)
        # a zero denominator is floored at half an error in n
        assert _mmce_ratio(0.1, 0.0, 20) == pytest.approx(4.0)

    def test_line_lower_quarter(self):
        seed = 4
        ds = line_design(np.arange(20))
        X = ds.points
        labels = (X[:, 0] <= 4.75).astype(int)
        wrong = {"lda": 0, "qda": 0, "tree": 0}
        folds = StratifiedKFold(n_splits=5, shuffle=True, random_state=seed)
        for train, test in folds.split(X, labels):
            lda = LinearDiscriminantAnalysis().fit(X[train], labels[train])
            qda = QuadraticDiscriminantAnalysis(reg_param=FeatureConfig().qda_reg_param).fit(X[train], labels[train])
            wrong["lda"] += int(np.sum(lda.predict(X[test]) != labels[test]))
            wrong["qda"] += int(np.sum(qda.predict(X[test]) != labels[test]))
            # a pure first split sits halfway between the two labels
            x = X[train, 0]
            cut = (x[labels[train] == 1].max() + x[labels[train] == 0].min()) / 2.0
            wrong["tree"] += int(np.sum((X[test, 0] <= cut).astype(int) != labels[test]))
        mmce = [wrong[name] / 20 for name in ("lda", "qda", "tree")]

        values = ela_level_group(ds, [0.25], seed)
        assert wrong["tree"] == 0
        np.testing.assert_allclose(values[:3], mmce)
        np.testing.assert_allclose(
            values[3:6],
            [_mmce_ratio(mmce[0], mmce[1], 20), _mmce_ratio(mmce[0], mmce[2], 20), _mmce_ratio(mmce[1], mmce[2], 20)],
        )
        assert values[6] == pytest.approx(np.mean(mmce))

    def test_two_point_label_rejected(self):
        # the lowest 15% of 0..9 holds two points
        with pytest.raises(DegenerateInputError) as exc_info:
            ela_level_group(line_design(np.arange(10)), [0.15], 0)
        assert exc_info.value.group == "ela_level"


class TestInformationContent:

    def test_alternating_fitness(self):
        # Every tour over 0..3 sees two distinct symbol pairs in equal share
        ds = line_design([0, 1, 0, 1])
        for seed in range(5):
            values = ic_group(ds, (0.0, 0.5, 2.0), seed)
            assert values[0] == pytest.approx(math.log(2, 6))
            assert values[0] == pytest.approx(0.3869, abs=1e-4)

    def test_constant_fitness_has_no_information(self):
        values = ic_group(line_design([5, 5, 5, 5, 5]), (0.0, 1.0), 3)
        assert values[0] == 0.0
        assert values[4] == 0.0

    def test_tour_visits_every_point_once(self):
        points = np.random.default_rng(0).normal(size=(30, 3))
        tour = nearest_neighbor_tour(points, 11)
        assert sorted(tour.tolist()) == list(range(30))

    def test_tour_tie_goes_to_smaller_index(self):
        points = np.array([[0.0], [1.0], [2.0]])
        for seed in range(20):
            tour = nearest_neighbor_tour(points, seed)
            if tour[0] == 1:
                assert tour.tolist() == [1, 0, 2]


class TestNearestBetter:

    def test_line_distances(self):
        dn, dnb, nb = nearest_better_distances(np.arange(4.0).reshape(-1, 1), np.arange(4.0))
        np.testing.assert_array_equal(dn, [1, 1, 1, 1])
        np.testing.assert_array_equal(dnb, [3, 1, 1, 1])
        np.testing.assert_array_equal(nb, [-1, 0, 1, 2])

    def test_line_group(self):
        values = nbc_group(line_design([0, 1, 2, 3]))
        assert values[0] == 0.0
        assert values[1] == pytest.approx(2.0 / 3.0)
        assert values[2] == 0.0

    def test_fitness_ties_ordered_by_index(self):
        dn, dnb, nb = nearest_better_distances(np.arange(3.0).reshape(-1, 1), np.zeros(3))
        assert nb.tolist() == [-1, 0, 1]


class TestCatalog:

    def test_fifty_six_unique_names(self):
        names = feature_names(FeatureConfig())
        assert len(names) == 56
        assert len(set(names)) == 56
