"""Trajectory vectorization, PCA compression, and the matched filter.

A complex n-bin shot becomes a real feature row [Re c_1..Re c_n, Im c_1..Im
c_n].  The matched filter scores a shot with S = sum_j |w_j| Re[e^{-i phi_j}
c_j] dt, where the optimal kernel w_j = conj(beta_j) / var(I_j) weights each
bin by its pointer separation over the information-quadrature variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateKernelError, InvalidSpecError
from .sim import Dataset

__all__ = [
    "FeatureMatrix",
    "PcaModel",
    "FilterKernel",
    "vectorize",
    "vectorize_samples",
    "unvectorize",
    "fit_pca",
    "project",
    "optimal_kernel",
    "matched_filter_statistic",
]


@dataclass
class FeatureMatrix:
    """Real design matrix (rows = shots) with per-row class labels."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2:
            raise InvalidSpecError("feature matrix must be 2-D")
        if self.y.shape != (self.X.shape[0],):
            raise InvalidSpecError(
                f"labels shape {self.y.shape} does not match {self.X.shape[0]} rows")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def rows_for(self, label: int) -> np.ndarray:
        return self.X[self.y == label]

    def subset(self, idx: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.X[idx], self.y[idx])


def vectorize_samples(samples: np.ndarray) -> np.ndarray:
    """Complex (n_shots, n_bins) -> real (n_shots, 2 n_bins), Re block then Im."""
    samples = np.atleast_2d(np.asarray(samples))
    return np.concatenate([samples.real, samples.imag], axis=1)


def unvectorize(X: np.ndarray) -> np.ndarray:
    """Inverse of vectorize_samples."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] % 2 != 0:
        raise InvalidSpecError("row length must be even (Re block + Im block)")
    m = X.shape[1] // 2
    return X[:, :m] + 1j * X[:, m:]


def vectorize(dataset: Dataset) -> FeatureMatrix:
    """Feature matrix of a dataset: one row per shot, labels preserved."""
    return FeatureMatrix(vectorize_samples(dataset.samples),
                         dataset.labels.astype(np.uint8))


# ---------------------------------------------------------------------------
# PCA


@dataclass
class PcaModel:
    """Dense-eigendecomposition PCA fit.

    components has orthonormal columns (one per retained direction, descending
    eigenvalue); eigenvalues holds the d retained values and spectrum the full
    clipped set, so total variance stays auditable.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    spectrum: np.ndarray
    d: int
    variance_fraction: float

    @property
    def explained_fraction(self) -> float:
        return float(np.sum(self.eigenvalues)) / float(np.sum(self.spectrum))


def fit_pca(train: FeatureMatrix | np.ndarray,
            variance_fraction: float = 0.999) -> PcaModel:
    """PCA by exact symmetric eigendecomposition of the sample covariance.

    Keeps the smallest d whose cumulative eigenvalue fraction reaches
    ``variance_fraction``.
    """
    if not 0.0 < variance_fraction <= 1.0:
        raise InvalidSpecError(
            f"variance_fraction must be in (0, 1], got {variance_fraction}")
    X = train.X if isinstance(train, FeatureMatrix) else np.asarray(train, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InvalidSpecError("PCA needs a 2-D matrix with at least 2 rows")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / (X.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    total = float(np.sum(evals))
    if total <= 0.0:
        raise InvalidSpecError("training data has zero variance")
    frac = np.cumsum(evals) / total
    d = int(np.searchsorted(frac, variance_fraction - 1e-12) + 1)
    d = min(d, evals.size)
    return PcaModel(mean=mean, components=evecs[:, :d].copy(),
                    eigenvalues=evals[:d].copy(), spectrum=evals, d=d,
                    variance_fraction=variance_fraction)


def project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project row(s) onto the retained components."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    out = (np.atleast_2d(x) - model.mean) @ model.components
    return out[0] if single else out


def project_features(model: PcaModel, fm: FeatureMatrix) -> FeatureMatrix:
    return FeatureMatrix(project(model, fm.X), fm.y)


# ---------------------------------------------------------------------------
# Matched filter


@dataclass(frozen=True)
class FilterKernel:
    """Per-bin complex matched-filter weights and the bin width they assume."""

    weights: np.ndarray
    dt: float
    beta: np.ndarray
    var_i: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.weights)

    @property
    def phase(self) -> np.ndarray:
        """phi_j with w_j = |w_j| e^{-i phi_j}."""
        return -np.angle(self.weights)


def _pooled_residuals(samples: np.ndarray, labels: np.ndarray) -> np.ndarray:
    out = np.empty_like(samples)
    for label in (0, 1):
        block = samples[labels == label]
        out[labels == label] = block - block.mean(axis=0)
    return out


def optimal_kernel(train: Dataset | tuple,
                   quadrature_average_variance: bool = False) -> FilterKernel:
    """Estimate w_j = conj(beta_j) / var(I_j) from a labeled training set.

    beta_j is the per-bin difference of class means.  var(I_j) is the pooled
    within-class variance of the information quadrature I_j = Re[e^{-i
    theta_j} c_j], theta_j = arg(beta_j).  With circularly symmetric noise
    the direction drops out; ``quadrature_average_variance`` switches to the
    direction-free estimator (mean of the two quadrature variances per bin),
    which makes the filter the exact complex form of the shared-diagonal
    linear discriminant with tied quadratures.
    """
    if isinstance(train, Dataset):
        samples, labels, dt = train.samples, train.labels, train.grid.dt
    else:
        samples, labels, dt = train
        samples = np.asarray(samples)
        labels = np.asarray(labels)
    if samples.shape[0] != labels.shape[0]:
        raise InvalidSpecError("samples/labels length mismatch")
    n0 = int(np.sum(labels == 0))
    n1 = int(np.sum(labels == 1))
    if n0 == 0 or n1 == 0:
        raise InvalidSpecError("kernel estimation needs both classes present")

    beta = samples[labels == 0].mean(axis=0) - samples[labels == 1].mean(axis=0)
    if np.all(beta == 0.0):
        raise DegenerateKernelError("class means coincide exactly; kernel is zero")
    resid = _pooled_residuals(samples, labels)
    if quadrature_average_variance:
        var_i = np.sum(resid.real**2 + resid.imag**2, axis=0) / (2 * (n0 + n1))
    else:
        # rotate each bin so beta points along +Re, then take Re variance
        phase = np.exp(-1j * np.angle(beta))
        var_i = np.mean((resid * phase).real**2, axis=0)
    if np.any(var_i <= 0.0):
        raise DegenerateKernelError(
            f"{int(np.sum(var_i <= 0))} bins have zero variance")
    return FilterKernel(weights=np.conj(beta) / var_i, dt=float(dt),
                        beta=beta, var_i=var_i)


def matched_filter_statistic(shot, kernel: FilterKernel):
    """S = sum_j |w_j| Re[e^{-i phi_j} c_j] dt  (= sum_j Re[w_j c_j] dt).

    Accepts a Trajectory, a complex vector, or a complex matrix of shots.
    """
    samples = getattr(shot, "samples", shot)
    samples = np.asarray(samples)
    if samples.shape[-1] != kernel.weights.shape[0]:
        raise InvalidSpecError(
            f"shot has {samples.shape[-1]} bins, kernel expects "
            f"{kernel.weights.shape[0]}")
    s = np.sum(np.real(samples * kernel.weights), axis=-1) * kernel.dt
    return float(s) if s.ndim == 0 else s
