import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skipgram_mci.classifiers import (
    Kernel,
    LogisticParams,
    ModelSpec,
    NBParams,
    SVMParams,
    TreeParams,
    Variant,
    baseline_svm,
    load_model,
    predict_label,
    predict_score,
    save_model,
    table1_models,
    train,
)
from skipgram_mci.classifiers.logistic import LogisticModel, gradient, objective
from skipgram_mci.classifiers.naive_bayes import NaiveBayesModel
from skipgram_mci.classifiers.svm import kernel_matrix, smo
from skipgram_mci.classifiers.tree import added_errors
from skipgram_mci.errors import TrainingError
from skipgram_mci.features import SparseVector
from skipgram_mci.transcripts import Label

from oracles import grid_maximize, kkt_violation, logistic_objective


def logistic(ridge):
    return ModelSpec(Variant.LOGISTIC_RIDGE, LogisticParams(ridge=ridge))


def linear_svm(C=1.0, **kw):
    return ModelSpec(Variant.SVM_SMO, SVMParams(C=C, kernel=Kernel.LINEAR, standardize=False,
                                                platt_calibrate=False, **kw))


class TestLogistic:
    def test_symmetric_two_points(self):
        model = train(logistic(1.0), np.array([[-1.0], [1.0]]), [0, 1])
        assert model.weights[0] > 0
        assert model.intercept == pytest.approx(0.0, abs=1e-9)

    def test_matches_grid_oracle(self):
        X = np.array([[-2.0], [-1.0], [1.0], [3.0]])
        y = np.array([0.0, 1.0, 0.0, 1.0])
        model = train(logistic(0.1), X, y)
        got = logistic_objective(model.weights, model.intercept, X, y, 0.1)
        best, best_val = grid_maximize(lambda p: logistic_objective(p[:1], p[1], X, y, 0.1), [0.0, 0.0], 5.0)
        assert got == pytest.approx(best_val, abs=1e-3)
        assert got >= best_val - 1e-9  # the Newton solution is at least as good as the grid
        np.testing.assert_allclose([model.weights[0], model.intercept], best, atol=1e-2)

    def test_zero_model_scores_half(self):
        model = LogisticModel(logistic(1.0), 3, np.zeros(3), 0.0)
        assert predict_score(model, np.array([5.0, -2.0, 1.0])) == 0.5

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(12, 3))
        y = (rng.random(12) < 0.5).astype(float)
        theta = rng.normal(size=4)
        num = np.zeros(4)
        for i in range(4):
            e = np.zeros(4)
            e[i] = 1e-6
            num[i] = (objective(theta + e, X, y, 0.3) - objective(theta - e, X, y, 0.3)) / 2e-6
        np.testing.assert_allclose(gradient(theta, X, y, 0.3), num, rtol=1e-6, atol=1e-8)

    def test_separable_data_stays_finite(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        model = train(logistic(1e-12), X, [0, 0, 1, 1])
        assert np.isfinite(model.weights).all() and np.isfinite(model.intercept)
        assert list(predict_label(model, X)) == [Label.CONTROL, Label.CONTROL, Label.MCI, Label.MCI]


class TestSVM:
    def test_two_point_max_margin(self):
        model = train(linear_svm(), np.array([[-1.0], [1.0]]), [0, 1])
        assert model.decision(np.array([[0.0]]))[0] == pytest.approx(0.0, abs=1e-9)
        assert sorted(model.support_indices.tolist()) == [0, 1]
        np.testing.assert_allclose(model.alpha, [0.5, 0.5], atol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_kkt_and_equality_constraint(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(30, 2))
        y = np.where(X[:, 0] + 0.5 * rng.normal(size=30) > 0, 1.0, -1.0)
        params = SVMParams(C=1.0, kernel=Kernel.RBF, gamma=0.5)
        K = kernel_matrix(X, X, params)
        res = smo(K, y, 1.0, tol=1e-3)
        assert abs(float(np.dot(res.alpha, y))) < 1e-9
        assert kkt_violation(res.alpha, y, K, res.b, 1.0) < 1e-3
        assert np.all(res.alpha >= 0) and np.all(res.alpha <= 1.0)

    def test_multiplier_one_ulp_below_bound_does_not_stall(self):
        # this dataset drives a multiplier to 0.9999999999999999 with C = 1,
        # which used to stall the solver until its iteration cap
        rng = np.random.default_rng(119)
        n = int(rng.integers(10, 41))
        X = rng.normal(size=(n, 3))
        y = np.where(X[:, 0] + X[:, 1] + 0.7 * rng.normal(size=n) > 0, 1.0, -1.0)
        K = kernel_matrix(X, X, SVMParams(C=1.0, kernel=Kernel.RBF, gamma=0.3))
        res = smo(K, y, 1.0, tol=1e-3)
        assert res.iterations < 10_000
        assert kkt_violation(res.alpha, y, K, res.b, 1.0) < 1e-3

    def test_platt_scores_are_probabilities(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(20, 3))
        y = (X[:, 0] > 0).astype(int)
        model = train(table1_models()[0], X, y)
        s = predict_score(model, X)
        assert np.all((s > 0) & (s < 1))
        # calibration is monotone in the decision value
        order = np.argsort(model.decision(X))
        assert np.all(np.diff(s[order]) >= -1e-12)

    def test_normalized_poly_kernel_unit_diagonal(self):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(5, 4))
        K = kernel_matrix(A, A, baseline_svm().params)
        np.testing.assert_allclose(np.diag(K), 1.0)
        assert np.all(np.abs(K) <= 1 + 1e-12)

    def test_decision_value_threshold(self):
        model = train(linear_svm(), np.array([[-1.0], [1.0]]), [0, 1])
        assert predict_score(model, np.array([-0.2])) == pytest.approx(-0.2)
        assert predict_label(model, np.array([-0.2])) is Label.CONTROL


class TestNaiveBayes:
    def test_symmetric_data_scores_half(self):
        X = np.array([[-1.0], [1.0], [-1.0], [1.0]])
        for kd in (True, False):
            model = train(ModelSpec(Variant.NAIVE_BAYES_KDE, NBParams(kernel_density=kd)), X, [0, 0, 1, 1])
            assert predict_score(model, np.array([0.3])) == pytest.approx(0.5, abs=1e-12)

    def test_gaussian_posterior_by_hand(self):
        spec = ModelSpec(Variant.NAIVE_BAYES_KDE, NBParams(kernel_density=False))
        prior = np.log([0.4, 0.6])
        model = NaiveBayesModel(spec, 2, prior, means=[[0.0, 1.0], [2.0, -1.0]],
                                variances=[[1.0, 4.0], [0.5, 1.0]])
        x = np.array([1.0, 0.5])

        def normal_pdf(v, mu, var):
            return math.exp(-(v - mu) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)

        ctl = 0.4 * normal_pdf(1.0, 0.0, 1.0) * normal_pdf(0.5, 1.0, 4.0)
        mci = 0.6 * normal_pdf(1.0, 2.0, 0.5) * normal_pdf(0.5, -1.0, 1.0)
        assert predict_score(model, x) == pytest.approx(mci / (ctl + mci), abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_posteriors_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(10, 3)) * rng.uniform(0.1, 10)
        y = np.array([0, 1] * 5)
        model = train(table1_models()[1], X, y)
        post = model.posteriors(rng.normal(size=(5, 3)) * 5)
        np.testing.assert_allclose(post.sum(axis=1), 1.0, atol=1e-12)

    def test_laplace_priors(self):
        model = train(ModelSpec(Variant.NAIVE_BAYES_KDE, NBParams(kernel_density=False)),
                      np.zeros((4, 1)) + np.arange(4)[:, None], [0, 1, 1, 1])
        np.testing.assert_allclose(model.priors, [2 / 6, 4 / 6])


def _tree_accuracy(tree, X, y):
    """tree = (f_root, t_root, left, right) where each child is a label or (f, t, l, r)."""
    def predict(node, x):
        while isinstance(node, tuple):
            f, t, left, right = node
            node = left if x[f] <= t else right
        return node
    return np.mean([predict(tree, x) == yi for x, yi in zip(X, y)])


class TestTree:
    XOR_X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 2, dtype=float)
    XOR_Y = np.array([0, 1, 1, 0] * 2)

    def test_xor_needs_depth_two(self):
        # exhaustive oracle: no stump fits XOR, some depth-2 tree does
        stumps = [(f, 0.0, a, b) for f in (0, 1) for a in (0, 1) for b in (0, 1)]
        assert max(_tree_accuracy(t, self.XOR_X, self.XOR_Y) for t in stumps) < 1.0
        depth2 = [
            (f, 0.0, left, right)
            for f in (0, 1)
            for left in stumps + [0, 1]
            for right in stumps + [0, 1]
        ]
        assert max(_tree_accuracy(t, self.XOR_X, self.XOR_Y) for t in depth2) == 1.0

        for prune in (False, True):
            model = train(ModelSpec(Variant.DECISION_TREE, TreeParams(prune=prune)), self.XOR_X, self.XOR_Y)
            assert model.root.depth() == 2
            pred = (predict_score(model, self.XOR_X) >= 0.5).astype(int)
            assert np.array_equal(pred, self.XOR_Y)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(4)
        X = rng.integers(0, 5, size=(30, 3)).astype(float)
        y = (X[:, 0] + X[:, 1] > 4).astype(int)
        m1 = train(table1_models()[2], X, y)
        m2 = train(table1_models()[2], np.exp(X), y)
        np.testing.assert_array_equal(predict_score(m1, X), predict_score(m2, np.exp(X)))

    def test_pruning_collapses_noise(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 5))
        y = rng.integers(0, 2, size=40)
        unpruned = train(ModelSpec(Variant.DECISION_TREE, TreeParams(prune=False)), X, y)
        pruned = train(ModelSpec(Variant.DECISION_TREE, TreeParams(prune=True)), X, y)
        assert len(list(pruned.root.leaves())) < len(list(unpruned.root.leaves()))

    def test_added_errors_reference_values(self):
        # upper confidence bound on the error rate of a leaf with no errors: 1 - CF^(1/n)
        assert added_errors(6, 0, 0.25) == pytest.approx(6 * (1 - 0.25 ** (1 / 6)))
        assert added_errors(2, 2, 0.25) == 0.0


class TestCommon:
    def test_single_class_rejected(self):
        with pytest.raises(TrainingError):
            train(table1_models()[0], np.zeros((3, 2)), [1, 1, 1])

    def test_non_finite_rejected(self):
        with pytest.raises(TrainingError):
            train(table1_models()[3], np.array([[np.nan], [1.0]]), [0, 1])

    def test_label_thresholds(self):
        model = LogisticModel(logistic(1.0), 1, [math.log(0.7 / 0.3)], 0.0)
        assert predict_score(model, np.array([1.0])) == pytest.approx(0.7)
        assert predict_label(model, np.array([1.0])) is Label.MCI
        assert predict_label(LogisticModel(logistic(1.0), 1, [0.0], 0.0), np.array([1.0])) is Label.MCI

    def test_sparse_input(self):
        model = train(table1_models()[3], np.array([[0.0, 1.0], [1.0, 0.0]]), [0, 1])
        sv = SparseVector(np.array([0]), np.array([1.0]), 2)
        assert predict_score(model, sv) == predict_score(model, np.array([1.0, 0.0]))

    def test_dimension_mismatch(self):
        model = train(table1_models()[3], np.array([[0.0], [1.0]]), [0, 1])
        with pytest.raises(ValueError):
            predict_score(model, np.zeros(3))

    @pytest.mark.parametrize("spec", table1_models() + [baseline_svm()], ids=lambda s: s.name)
    def test_serialization_is_bit_identical(self, spec, tmp_path):
        rng = np.random.default_rng(7)
        X = rng.poisson(1.0, size=(24, 6)).astype(float)
        y = (X[:, 0] + rng.normal(size=24) > 1).astype(int)
        model = train(spec, X, y)
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        probe = rng.poisson(1.0, size=(10, 6)).astype(float)
        assert predict_score(back, probe).tobytes() == predict_score(model, probe).tobytes()

    def test_spec_round_trip(self):
        for spec in table1_models() + [baseline_svm()]:
            assert ModelSpec.from_dict(spec.to_dict()) == spec

    def test_spec_coerces_strings(self):
        spec = ModelSpec.from_dict({"variant": "svm", "C": "2", "gamma": "1e-3", "platt_calibrate": "false"})
        assert spec.params.C == 2.0 and spec.params.gamma == 1e-3 and spec.params.platt_calibrate is False

    def test_unknown_parameter(self):
        with pytest.raises(ValueError):
            ModelSpec.from_dict({"variant": "tree", "depth": 3})


def test_xor_pairs_exhaustive():
    """Every labeling of four distinct points on a line is fit by an unpruned tree."""
    X = np.arange(4, dtype=float)[:, None].repeat(2, axis=0)
    for labels in itertools.product((0, 1), repeat=4):
        if len(set(labels)) < 2:
            continue
        y = np.repeat(labels, 2)
        model = train(ModelSpec(Variant.DECISION_TREE, TreeParams(prune=False)), X, y)
        assert np.array_equal((predict_score(model, X) >= 0.5).astype(int), y)
