"""SVM solver tests: analytic solutions, dual optimality vs an independent
projected-gradient oracle, KKT conditions, and cross-validation behaviour."""

import numpy as np
import pytest

from readoutml.errors import InvalidSpecError, StratificationError
from readoutml.features import FeatureMatrix, fit_pca, project, vectorize
from readoutml.svm import (
    KernelSpec,
    cross_validate,
    fit_svm,
    median_heuristic_gamma,
    svm_classify,
    svm_decision,
)

from oracles import svm_dual_oracle


def _gram(X, kernel):
    if kernel.kind == "linear":
        return X @ X.T
    sq = np.sum(X**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    return np.exp(-kernel.gamma * np.clip(d2, 0.0, None))


def _dual_objective(model):
    # sum alpha - 1/2 dc^T K dc; dual_coef = alpha * y so alpha = |dual_coef|
    K = _gram(model.support_vectors, model.kernel)
    dc = model.dual_coef
    return float(np.sum(np.abs(dc)) - 0.5 * dc @ K @ dc)


def _blobs(rng, n_per, centers, std=1.0):
    X = np.vstack([c + std * rng.standard_normal((n_per, len(c)))
                   for c in centers])
    y = np.concatenate([np.full(n_per, -1.0), np.full(n_per, 1.0)])
    return X, y


class TestAnalyticSolutions:
    def test_two_point_problem_has_known_exact_solution(self):
        # x = -1 (y=-1) and x = +1 (y=+1), linear, C large: the dual optimum
        # is alpha = (1/2, 1/2), giving f(x) = x with zero bias.
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        model = fit_svm(X, y, C=100.0, tol=1e-8)
        assert model.n_support == 2
        assert np.allclose(np.sort(model.dual_coef), [-0.5, 0.5], atol=1e-9)
        assert abs(model.bias) <= 1e-9
        assert abs(svm_decision(model, np.array([0.0]))) <= 1e-9
        assert abs(svm_decision(model, np.array([1.0])) - 1.0) <= 1e-9
        assert abs(svm_decision(model, np.array([-1.0])) + 1.0) <= 1e-9
        assert float(model.dual_coef @ np.sign(model.dual_coef)) == pytest.approx(1.0)

    def test_xor_needs_the_rbf_kernel(self):
        X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        y = X[:, 0] * X[:, 1]
        rbf = fit_svm(X, y, C=100.0, kernel=KernelSpec("rbf", 1.0), tol=1e-6)
        assert np.array_equal(svm_classify(rbf, X), y.astype(int))
        lin = fit_svm(X, y, C=100.0, tol=1e-6)
        assert np.mean(svm_classify(lin, X) == y) <= 0.75

    def test_far_point_under_rbf_decays_to_bias(self):
        rng = np.random.default_rng(3)
        X, y = _blobs(rng, 20, [(-1.0, 0.0), (1.0, 0.0)])
        model = fit_svm(X, y, C=1.0, kernel=KernelSpec("rbf", 0.5))
        far = np.full(2, 1e6)
        assert svm_decision(model, far) == model.bias


class TestDualOptimality:
    @pytest.mark.parametrize("trial,C,kernel", [
        (0, 0.5, KernelSpec("linear")),
        (1, 10.0, KernelSpec("linear")),
        (2, 0.5, KernelSpec("rbf", 0.7)),
        (3, 10.0, KernelSpec("rbf", 0.7)),
    ])
    def test_dual_objective_matches_projected_gradient_oracle(self, trial, C, kernel):
        rng = np.random.default_rng(100 + trial)
        X = rng.standard_normal((20, 2))
        y = np.where(rng.random(20) < 0.5, -1.0, 1.0)
        y[:2] = [-1.0, 1.0]
        model = fit_svm(X, y, C=C, kernel=kernel, tol=1e-10, max_passes=3000)
        obj_oracle, _ = svm_dual_oracle(_gram(X, kernel), y, C)
        assert abs(_dual_objective(model) - obj_oracle) <= 1e-6

    def test_dual_coefficients_respect_the_box_and_sum_constraint(self):
        rng = np.random.default_rng(42)
        X, y = _blobs(rng, 30, [(-0.5, 0.0), (0.5, 0.0)])
        model = fit_svm(X, y, C=2.0, kernel=KernelSpec("rbf", 0.5), tol=1e-8)
        alpha = np.abs(model.dual_coef)
        assert np.all(alpha > 0)
        assert np.all(alpha <= 2.0 + 1e-12)
        assert abs(np.sum(model.dual_coef)) <= 1e-10


class TestKktConditions:
    def test_all_three_cases_hold_on_overlapping_blobs(self):
        rng = np.random.default_rng(7)
        X, y = _blobs(rng, 100, [(-0.8, 0.0), (0.8, 0.0)])
        C, tol = 1.0, 1e-8
        model = fit_svm(X, y, C=C, kernel=KernelSpec("rbf", 0.5), tol=tol)
        alpha_of = {sv.tobytes(): abs(dc)
                    for sv, dc in zip(model.support_vectors, model.dual_coef)}
        margins = y * svm_decision(model, X)
        n_zero = n_free = n_bound = 0
        for row, m in zip(X, margins):
            a = alpha_of.get(row.tobytes(), 0.0)
            if a <= 1e-12 * C:
                n_zero += 1
                assert m >= 1.0 - 1e-6
            elif a >= C * (1.0 - 1e-9):
                n_bound += 1
                assert m <= 1.0 + 1e-6
            else:
                n_free += 1
                assert abs(m - 1.0) <= 1e-6
        assert n_zero > 0 and n_free > 0 and n_bound > 0

    def test_free_support_vectors_sit_on_the_margin(self):
        rng = np.random.default_rng(11)
        X, y = _blobs(rng, 50, [(-2.0, 0.0), (2.0, 0.0)])
        model = fit_svm(X, y, C=5.0, tol=1e-8)
        alpha = np.abs(model.dual_coef)
        free = (alpha > 1e-6) & (alpha < 5.0 - 1e-6)
        assert np.any(free)
        f = svm_decision(model, model.support_vectors[free])
        yy = np.sign(model.dual_coef[free])
        assert np.max(np.abs(yy * f - 1.0)) <= 1e-6


class TestInterfaceBehaviour:
    def test_row_permutation_leaves_the_fit_unchanged(self):
        rng = np.random.default_rng(5)
        X, y = _blobs(rng, 40, [(-0.7, 0.3), (0.7, -0.3)])
        perm = rng.permutation(80)
        a = fit_svm(X, y, C=1.0, kernel=KernelSpec("rbf", 0.8))
        b = fit_svm(X[perm], y[perm], C=1.0, kernel=KernelSpec("rbf", 0.8))
        assert a.bias == b.bias
        assert np.array_equal(a.support_vectors, b.support_vectors)
        assert np.array_equal(a.dual_coef, b.dual_coef)
        probe = rng.standard_normal((50, 2))
        assert np.array_equal(svm_classify(a, probe), svm_classify(b, probe))

    def test_feature_matrix_input_maps_class_zero_to_plus_one(self):
        rng = np.random.default_rng(9)
        X = np.vstack([rng.standard_normal((30, 2)) - 3.0,
                       rng.standard_normal((30, 2)) + 3.0])
        fm = FeatureMatrix(X, np.repeat([0, 1], 30))
        model = fit_svm(fm, C=10.0)
        assert svm_classify(model, np.array([-3.0, 0.0])) == 1
        assert svm_classify(model, np.array([3.0, 0.0])) == -1

    def test_median_heuristic_is_inverse_median_squared_distance(self):
        X = np.array([[0.0], [1.0], [3.0]])
        # pairwise squared distances 1, 9, 4 -> median 4
        assert median_heuristic_gamma(X) == pytest.approx(0.25)

    def test_tie_goes_to_plus_one(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        model = fit_svm(X, y, C=100.0, tol=1e-8)
        assert svm_classify(model, np.array([0.0])) == 1


class TestCrossValidate:
    def test_separable_blobs_reach_zero_error_and_prefer_small_c(self):
        rng = np.random.default_rng(17)
        X, y = _blobs(rng, 20, [(-4.0, 0.0), (4.0, 0.0)])
        C, gamma, err = cross_validate(X, y, C_grid=(1.0, 10.0), folds=4,
                                       kind="linear")
        assert err == 0.0
        assert C == 1.0
        assert gamma is None

    def test_duplicated_grid_entries_change_nothing(self):
        rng = np.random.default_rng(23)
        X, y = _blobs(rng, 25, [(-0.8, 0.0), (0.8, 0.0)])
        ref = cross_validate(X, y, C_grid=(1.0, 10.0), gamma_grid=(0.5, 2.0),
                             folds=5)
        dup = cross_validate(X, y, C_grid=(10.0, 1.0, 1.0),
                             gamma_grid=(2.0, 0.5, 0.5), folds=5)
        assert ref == dup

    def test_cv_error_tracks_held_out_error(self, paper_1600):
        fm = vectorize(paper_1600)
        train = np.concatenate([np.arange(0, 400), np.arange(800, 1200)])
        test = np.setdiff1d(np.arange(1600), train)
        pca = fit_pca(fm.subset(train), variance_fraction=0.999)
        Xtr = project(pca, fm.X[train])
        Xte = project(pca, fm.X[test])
        ytr = np.where(fm.y[train] == 0, 1.0, -1.0)
        yte = np.where(fm.y[test] == 0, 1.0, -1.0)
        g = median_heuristic_gamma(Xtr)
        C, gamma, cv_err = cross_validate(Xtr, ytr, C_grid=(1.0, 10.0),
                                          gamma_grid=(g,), folds=5)
        model = fit_svm(Xtr, ytr, C=C, kernel=KernelSpec("rbf", gamma))
        test_err = float(np.mean(svm_classify(model, Xte) != yte))
        assert abs(cv_err - test_err) < 0.02

    def test_too_few_positives_for_the_fold_count(self):
        rng = np.random.default_rng(31)
        X = rng.standard_normal((40, 2))
        y = np.full(40, -1.0)
        y[:3] = 1.0
        with pytest.raises(StratificationError):
            cross_validate(X, y, folds=5, kind="linear")


class TestValidation:
    def test_kernel_spec_rejects_bad_parameters(self):
        with pytest.raises(InvalidSpecError):
            KernelSpec("poly")
        with pytest.raises(InvalidSpecError):
            KernelSpec("linear", gamma=1.0)
        with pytest.raises(InvalidSpecError):
            KernelSpec("rbf", gamma=-2.0)
        with pytest.raises(InvalidSpecError):
            KernelSpec("rbf", gamma=float("nan"))

    def test_fit_rejects_bad_inputs(self):
        X = np.array([[-1.0], [1.0]])
        with pytest.raises(InvalidSpecError):
            fit_svm(X, np.array([0.0, 1.0]))
        with pytest.raises(InvalidSpecError):
            fit_svm(X, np.array([1.0, 1.0]))
        with pytest.raises(InvalidSpecError):
            fit_svm(X, np.array([-1.0, 1.0]), C=0.0)
        with pytest.raises(InvalidSpecError):
            fit_svm(X, np.array([-1.0, 1.0, 1.0]))
        with pytest.raises(InvalidSpecError):
            fit_svm(X, None)

    def test_median_heuristic_needs_spread_rows(self):
        with pytest.raises(InvalidSpecError):
            median_heuristic_gamma(np.array([[1.0]]))
        with pytest.raises(InvalidSpecError):
            median_heuristic_gamma(np.ones((5, 2)))

    def test_cross_validate_rejects_degenerate_grids(self):
        rng = np.random.default_rng(1)
        X, y = _blobs(rng, 10, [(-1.0, 0.0), (1.0, 0.0)])
        with pytest.raises(InvalidSpecError):
            cross_validate(X, y, C_grid=(), folds=2)
        with pytest.raises(InvalidSpecError):
            cross_validate(X, y, folds=1)
