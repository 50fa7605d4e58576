"""Binary Gaussian discriminants over trajectory features.

Four variants from one fit routine: shared or per-class covariance, full or
diagonal.  Scores follow the two-class log-likelihood-ratio form

    score(x) = 1/2 x^T (S1^-1 - S0^-1) x + (mu0^T S0^-1 - mu1^T S1^-1) x
    v        = 1/2 (mu0^T S0^-1 mu0 - mu1^T S1^-1 mu1)
               + 1/2 log(|S0|/|S1|) + log(p1/p0)

with class 0 assigned iff score(x) >= v.  Covariances are population
normalized (divide by n_k, not n_k - 1) so duplicating every training row
leaves the fit unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import InvalidSpecError, SingularCovarianceError
from .features import FeatureMatrix

__all__ = ["GaussianDiscriminant", "fit_gaussian", "score", "classify", "KINDS"]

KINDS = ("ldad", "lda", "qdad", "qda")


@dataclass
class GaussianDiscriminant:
    """Fitted two-class discriminant.

    covariances is (2, p) for diagonal kinds and (2, p, p) for full kinds;
    shared-covariance kinds store two identical entries.
    """

    kind: str
    means: np.ndarray
    covariances: np.ndarray
    priors: np.ndarray
    threshold: float
    condition_numbers: tuple[float, float]
    shrinkage: float = 0.0
    _chol: list = field(default=None, repr=False, compare=False)
    _inv_var: np.ndarray = field(default=None, repr=False, compare=False)
    _lin: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self._prepare()

    @property
    def diagonal(self) -> bool:
        return self.kind in ("ldad", "qdad")

    @property
    def shared(self) -> bool:
        return self.kind in ("ldad", "lda")

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def _prepare(self):
        mu0, mu1 = self.means
        if self.diagonal:
            self._inv_var = 1.0 / self.covariances
            self._logdets = np.sum(np.log(self.covariances), axis=1)
            self._prec_mu = self._inv_var * self.means
        else:
            # one factorization when both classes share the matrix
            L0 = cholesky(self.covariances[0], lower=True)
            L1 = L0 if self.shared else cholesky(self.covariances[1], lower=True)
            self._chol = [L0, L1]
            self._logdets = np.array(
                [2.0 * np.sum(np.log(np.diag(L))) for L in self._chol])
            self._prec_mu = np.stack(
                [self._apply_precision(k, self.means[k]) for k in (0, 1)])
        self._lin = self._prec_mu[0] - self._prec_mu[1]

    def _apply_precision(self, k: int, x: np.ndarray) -> np.ndarray:
        """S_k^-1 x via triangular solves (never an explicit inverse)."""
        if self.diagonal:
            return self._inv_var[k] * x
        L = self._chol[k]
        half = solve_triangular(L, np.atleast_2d(x).T, lower=True)
        return solve_triangular(L.T, half, lower=False).T.reshape(x.shape)

    def _quad(self, k: int, X: np.ndarray) -> np.ndarray:
        """x^T S_k^-1 x row-wise."""
        if self.diagonal:
            return X**2 @ self._inv_var[k]
        half = solve_triangular(self._chol[k], X.T, lower=True)
        return np.sum(half**2, axis=0)


def fit_gaussian(train: FeatureMatrix,
                 kind: str = "lda",
                 *,
                 shrinkage: float = 0.0,
                 tie_quadrature_variance: bool = False,
                 priors: tuple | None = None,
                 cond_threshold: float = 1e8) -> GaussianDiscriminant:
    """Fit one of the four Gaussian discriminants.

    shrinkage interpolates full covariances toward their own diagonal,
    (1 - s) S + s diag(S).  tie_quadrature_variance averages each bin's two
    quadrature variances (diagonal kinds only); with it the shared-diagonal
    fit reproduces the matched filter exactly.

    Raises SingularCovarianceError when any covariance used has a
    non-positive eigenvalue or condition number above ``cond_threshold``.
    """
    if kind not in KINDS:
        raise InvalidSpecError(f"unknown discriminant kind {kind!r}")
    if not 0.0 <= shrinkage <= 1.0:
        raise InvalidSpecError(f"shrinkage must be in [0, 1], got {shrinkage}")
    diagonal = kind in ("ldad", "qdad")
    pooled = kind in ("ldad", "lda")
    if tie_quadrature_variance and not diagonal:
        raise InvalidSpecError("tie_quadrature_variance applies to diagonal kinds only")

    X, y = train.X, train.y
    n0 = int(np.sum(y == 0))
    n1 = int(np.sum(y == 1))
    if n0 == 0 or n1 == 0:
        raise InvalidSpecError("training set must contain both classes")
    blocks = [X[y == 0], X[y == 1]]
    means = np.stack([b.mean(axis=0) for b in blocks])
    resid = [blocks[k] - means[k] for k in (0, 1)]

    if diagonal:
        if pooled:
            var = (np.sum(resid[0]**2, axis=0) + np.sum(resid[1]**2, axis=0)) / (n0 + n1)
            var = np.stack([var, var])
        else:
            var = np.stack([np.mean(r**2, axis=0) for r in resid])
        if tie_quadrature_variance:
            p = var.shape[1]
            if p % 2 != 0:
                raise InvalidSpecError("quadrature tying needs an even feature count")
            m = p // 2
            avg = 0.5 * (var[:, :m] + var[:, m:])
            var = np.concatenate([avg, avg], axis=1)
        covs = var
        conds = []
        for k in (0, 1):
            vmin, vmax = float(np.min(var[k])), float(np.max(var[k]))
            cond = np.inf if vmin <= 0.0 else vmax / vmin
            if vmin <= 0.0 or cond > cond_threshold:
                raise SingularCovarianceError(
                    f"class {k} diagonal covariance ill-conditioned", cond)
            conds.append(cond)
    else:
        if pooled:
            S = (resid[0].T @ resid[0] + resid[1].T @ resid[1]) / (n0 + n1)
            mats = [S, S]
        else:
            mats = [(r.T @ r) / len(r) for r in resid]
        if shrinkage > 0.0:
            mats = [(1.0 - shrinkage) * S + shrinkage * np.diag(np.diag(S))
                    for S in mats]
        covs = np.stack(mats)
        conds = []
        for k in (0, 1):
            if pooled and k == 1:
                conds.append(conds[0])
                continue
            evals = np.linalg.eigvalsh(covs[k])
            lo, hi = float(evals[0]), float(evals[-1])
            cond = np.inf if lo <= 0.0 else hi / lo
            if lo <= 0.0 or cond > cond_threshold:
                raise SingularCovarianceError(
                    f"class {k} covariance has eigenvalue range "
                    f"[{lo:.3e}, {hi:.3e}]", cond)
            conds.append(cond)

    if priors is None:
        pri = np.array([n0, n1], dtype=float) / (n0 + n1)
    else:
        pri = np.asarray(priors, dtype=float)
        if pri.shape != (2,) or np.any(pri <= 0):
            raise InvalidSpecError("priors must be two positive numbers")
        pri = pri / pri.sum()

    model = GaussianDiscriminant(kind=kind, means=means, covariances=covs,
                                 priors=pri, threshold=0.0,
                                 condition_numbers=(conds[0], conds[1]),
                                 shrinkage=shrinkage)
    quad0 = float(means[0] @ model._prec_mu[0])
    quad1 = float(means[1] @ model._prec_mu[1])
    logdet_term = 0.5 * float(model._logdets[0] - model._logdets[1])
    model.threshold = (0.5 * (quad0 - quad1) + logdet_term
                       + float(np.log(pri[1] / pri[0])))
    return model


def score(model: GaussianDiscriminant, x: np.ndarray) -> float | np.ndarray:
    """Log-likelihood-ratio statistic (threshold not subtracted)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != model.n_features:
        raise InvalidSpecError(
            f"expected {model.n_features} features, got {X.shape[1]}")
    s = X @ model._lin
    if not model.shared:
        s = s + 0.5 * (model._quad(1, X) - model._quad(0, X))
    return float(s[0]) if single else s


def classify(model: GaussianDiscriminant, x: np.ndarray) -> int | np.ndarray:
    """0 iff score >= threshold (ties to class 0)."""
    s = score(model, x)
    if np.isscalar(s):
        return int(not (s >= model.threshold))
    return np.where(s >= model.threshold, 0, 1).astype(np.uint8)
