"""Feature extraction: vectorization layout, PCA against a Jacobi oracle,
and the matched-filter kernel against simulator ground truth."""

import numpy as np
import pytest

from readoutml import features, sim
from readoutml.errors import DegenerateKernelError, InvalidSpecError
from readoutml.features import (FeatureMatrix, FilterKernel, fit_pca,
                                matched_filter_statistic, optimal_kernel,
                                project, unvectorize, vectorize,
                                vectorize_samples)

from oracles import jacobi_eigh


def test_vectorize_layout():
    row = vectorize_samples(np.array([1 + 2j, 3 - 1j]))
    assert row.tolist() == [[1.0, 3.0, 2.0, -1.0]]
    assert vectorize_samples(np.zeros(4, dtype=complex)).tolist() == [[0.0] * 8]
    z = np.array([[0.5 - 0.5j, 2j, -1.0]])
    assert np.array_equal(unvectorize(vectorize_samples(z)), z)


def test_full_dimension(paper_1600):
    fm = vectorize(paper_1600)
    assert fm.X.shape == (1600, 326)
    assert np.array_equal(fm.y, paper_1600.labels)
    assert fm.rows_for(0).shape[0] == 800


def test_feature_matrix_validation():
    with pytest.raises(InvalidSpecError):
        FeatureMatrix(np.zeros((3, 2, 2)), np.zeros(3))
    with pytest.raises(InvalidSpecError):
        FeatureMatrix(np.zeros((3, 2)), np.zeros(4))


class TestPca:
    def test_line_in_r2(self):
        t = np.linspace(-1, 1, 50)
        direction = np.array([3.0, 4.0]) / 5.0
        model = fit_pca(np.outer(t, direction) + [1.0, 2.0], 0.999)
        assert model.d == 1
        assert abs(model.components[:, 0] @ direction) == pytest.approx(1.0)

    def test_isotropic_r3_keeps_all(self):
        rng = np.random.default_rng(0)
        model = fit_pca(rng.standard_normal((5000, 3)), 0.999)
        assert model.d == 3

    def test_rank5_matches_jacobi_oracle(self):
        rng = np.random.default_rng(1)
        basis = np.linalg.qr(rng.standard_normal((50, 5)))[0]
        X = rng.standard_normal((400, 5)) * [5, 4, 3, 2, 1] @ basis.T
        X += 1e-9 * rng.standard_normal(X.shape)
        model = fit_pca(X, 0.999)
        assert model.d == 5

        Xc = X - X.mean(axis=0)
        cov = Xc.T @ Xc / (X.shape[0] - 1)
        ref_vals, ref_vecs = jacobi_eigh(cov)
        assert np.max(np.abs(model.spectrum - ref_vals)) < 1e-8
        for k in range(5):
            overlap = abs(model.components[:, k] @ ref_vecs[:, k])
            assert overlap == pytest.approx(1.0, abs=1e-8)

    def test_project_trivials(self):
        rng = np.random.default_rng(2)
        model = fit_pca(rng.standard_normal((200, 6)), 0.999)
        assert np.allclose(project(model, model.mean), 0.0)
        x = model.mean + 2.5 * model.components[:, 1]
        out = project(model, x)
        expected = np.zeros(model.d)
        expected[1] = 2.5
        assert np.allclose(out, expected, atol=1e-12)

    def test_reconstruction_residual_bounded(self, paper_1600):
        fm = vectorize(paper_1600)
        model = fit_pca(fm, 0.99)
        Z = project(model, fm.X)
        recon = model.mean + Z @ model.components.T
        resid = np.sum((fm.X - recon) ** 2)
        total = np.sum((fm.X - fm.X.mean(axis=0)) ** 2)
        assert resid / total <= (1.0 - 0.99) + 1e-9

    def test_orthonormality_and_trace(self, paper_1600):
        fm = vectorize(paper_1600)
        model = fit_pca(fm, 0.999)
        C = model.components
        assert np.max(np.abs(C.T @ C - np.eye(model.d))) < 1e-10
        Xc = fm.X - fm.X.mean(axis=0)
        trace = np.trace(Xc.T @ Xc / (fm.n_rows - 1))
        assert np.sum(model.spectrum) == pytest.approx(trace, rel=1e-8)

    def test_dimension_on_synthetic_data(self, paper_1600):
        # band-limited noise at 1.9 MHz confines the data to 22 real
        # dimensions (11 complex modes); 0.999 retains all of them
        model = fit_pca(vectorize(paper_1600), 0.999)
        assert 10 <= model.d <= 30
        assert model.d == 22
        assert model.explained_fraction >= 0.999

    def test_validation(self):
        with pytest.raises(InvalidSpecError):
            fit_pca(np.zeros((5, 3)), 0.0)
        with pytest.raises(InvalidSpecError):
            fit_pca(np.zeros((1, 3)), 0.9)
        with pytest.raises(InvalidSpecError):
            fit_pca(np.zeros((10, 3)), 0.9)  # zero variance


class TestKernel:
    def test_single_information_bin(self):
        rng = np.random.default_rng(3)
        n, bins = 4000, 12
        noise = 1e-3 * (rng.standard_normal((n, bins))
                        + 1j * rng.standard_normal((n, bins)))
        samples = noise.copy()
        labels = np.repeat([0, 1], n // 2)
        samples[labels == 1, 5] += 1.0
        kernel = optimal_kernel((samples, labels, 1e-8))
        mags = kernel.magnitude
        others = np.delete(mags, 5)
        assert np.max(others) < 0.01 * mags[5]

    def test_identical_classes_degenerate(self):
        rows = np.array([[1 + 1j, 2.0], [0.0, 1 - 1j]])
        samples = np.vstack([rows, rows])
        with pytest.raises(DegenerateKernelError):
            optimal_kernel((samples, np.array([0, 0, 1, 1]), 1e-8))

    def test_zero_variance_bin_degenerate(self):
        samples = np.ones((6, 3), dtype=complex)
        samples[3:, 0] = 2.0  # bin 0 carries signal but bins 1-2 are constant
        with pytest.raises(DegenerateKernelError):
            optimal_kernel((samples, np.array([0, 0, 0, 1, 1, 1]), 1e-8))

    def test_matches_ground_truth(self, ideal_white_3200):
        ds = ideal_white_3200
        kernel = optimal_kernel(ds)
        beta = sim.bin_mean_paths(ds.spec.cavity, ds.grid).beta
        sigma2 = ds.metadata["noise_sigma"] ** 2
        w_true = np.conj(beta) / sigma2
        rel_rms = (np.linalg.norm(kernel.weights - w_true)
                   / np.linalg.norm(w_true))
        assert rel_rms < 0.05

    def test_statistic_trivials(self):
        dt = 0.25
        zero = FilterKernel(weights=np.zeros(4, dtype=complex), dt=dt,
                            beta=np.zeros(4, dtype=complex), var_i=np.ones(4))
        traj = np.array([1 + 1j, 2.0, -1j, 0.5])
        assert matched_filter_statistic(traj, zero) == 0.0

        w = np.zeros(4, dtype=complex)
        w[2] = 1.0
        unit = FilterKernel(weights=w, dt=dt, beta=w.copy(), var_i=np.ones(4))
        hit = np.zeros(4, dtype=complex)
        hit[2] = 1.0
        assert matched_filter_statistic(hit, unit) == pytest.approx(dt)

    def test_statistic_linear(self):
        rng = np.random.default_rng(4)
        w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        kernel = FilterKernel(weights=w, dt=0.1, beta=w, var_i=np.ones(8))
        x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        y = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        lhs = matched_filter_statistic(3.5 * x + y, kernel)
        rhs = 3.5 * matched_filter_statistic(x, kernel) \
            + matched_filter_statistic(y, kernel)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_statistic_length_mismatch(self):
        kernel = FilterKernel(weights=np.ones(4, dtype=complex), dt=0.1,
                              beta=np.ones(4, dtype=complex), var_i=np.ones(4))
        with pytest.raises(InvalidSpecError):
            matched_filter_statistic(np.ones(5, dtype=complex), kernel)

    def test_histogram_separation_matches_prediction(self, ideal_white_6400):
        """Class-conditional statistic histograms reproduce the ground-truth
        separation within 5%."""
        ds = ideal_white_6400
        kernel = optimal_kernel(ds)
        s = matched_filter_statistic(ds.samples, kernel)
        s0, s1 = s[ds.labels == 0], s[ds.labels == 1]
        pooled_var = 0.5 * (np.var(s0, ddof=1) + np.var(s1, ddof=1))
        r_hat = (s0.mean() - s1.mean()) ** 2 / pooled_var
        predicted = sim.predicted_separation(ds.spec.cavity, ds.grid,
                                             ds.spec.amplifier, ds.spec.noise)
        assert r_hat == pytest.approx(predicted, rel=0.05)
