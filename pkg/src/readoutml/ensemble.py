"""Multi-class classifiers for the lifted {C0, C1, C2} problem.

multi_lda shares one pooled covariance and takes the class-conditional
log-density argmax.  multi_svm trains one-vs-rest binary machines and takes
the decision-value argmax; with two classes it degenerates to the plain
binary SVM.  rusboost runs boosting rounds that undersample the majority
classes to the minority size before fitting a depth-1 stump, which keeps the
small decayed-shot class visible to the weak learner.

Training rows are canonically sorted first, so fits are invariant under
permutation of the training set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import InvalidSpecError, SingularCovarianceError
from .features import FeatureMatrix
from .svm import KernelSpec, SvmModel, fit_svm, svm_decision

__all__ = [
    "MultiClassModel",
    "Stump",
    "fit_multiclass",
    "predict_multiclass",
    "collapse_to_binary",
    "KINDS",
]

KINDS = ("multi_lda", "multi_svm", "rusboost")


@dataclass(frozen=True)
class Stump:
    """Depth-1 axis-aligned split: class_below if x[f] <= threshold."""

    feature: int
    threshold: float
    class_below: int
    class_above: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.where(X[:, self.feature] <= self.threshold,
                        self.class_below, self.class_above)


@dataclass
class MultiClassModel:
    kind: str
    classes: np.ndarray
    # multi_lda
    means: np.ndarray | None = None
    chol: np.ndarray | None = None
    log_priors: np.ndarray | None = None
    # multi_svm
    submodels: list[SvmModel] | None = None
    # rusboost
    stumps: list[Stump] | None = None
    stump_weights: np.ndarray | None = None


def _canonicalize(X: np.ndarray, y: np.ndarray):
    keys = [(X[i].tobytes(), int(y[i])) for i in range(X.shape[0])]
    order = np.array(sorted(range(X.shape[0]), key=keys.__getitem__), dtype=int)
    return np.ascontiguousarray(X[order]), y[order]


def _fit_multi_lda(X, y, classes, cond_threshold=1e8):
    n, p = X.shape
    means = np.stack([X[y == c].mean(axis=0) for c in classes])
    pooled = np.zeros((p, p))
    for idx, c in enumerate(classes):
        r = X[y == c] - means[idx]
        pooled += r.T @ r
    pooled /= n
    evals = np.linalg.eigvalsh(pooled)
    lo, hi = float(evals[0]), float(evals[-1])
    cond = np.inf if lo <= 0 else hi / lo
    if lo <= 0 or cond > cond_threshold:
        raise SingularCovarianceError(
            f"pooled covariance eigenvalue range [{lo:.3e}, {hi:.3e}]", cond)
    L = cholesky(pooled, lower=True)
    counts = np.array([np.sum(y == c) for c in classes], dtype=float)
    return means, L, np.log(counts / n)


def _multi_lda_scores(model: MultiClassModel, X: np.ndarray) -> np.ndarray:
    half_mu = solve_triangular(model.chol, model.means.T, lower=True)  # (p, K)
    half_x = solve_triangular(model.chol, X.T, lower=True)  # (p, n)
    lin = half_x.T @ half_mu
    quad = 0.5 * np.sum(half_mu**2, axis=0)
    return lin - quad[None, :] + model.log_priors[None, :]


def _fit_stump(X: np.ndarray, y_idx: np.ndarray, w: np.ndarray, k: int) -> Stump:
    """Exact weighted search over all features and interior thresholds."""
    n, p = X.shape
    total_per_class = np.zeros(k)
    np.add.at(total_per_class, y_idx, w)
    total = total_per_class.sum()
    best = None
    for f in range(p):
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        cum = np.zeros((n, k))
        cum[np.arange(n), y_idx[order]] = w[order]
        cum = np.cumsum(cum, axis=0)
        distinct = np.flatnonzero(sv[:-1] < sv[1:])
        if distinct.size == 0:
            continue
        left = cum[distinct]  # weight per class on the <= side
        right = total_per_class[None, :] - left
        below = np.argmax(left, axis=1)
        above = np.argmax(right, axis=1)
        score = left[np.arange(distinct.size), below] \
            + right[np.arange(distinct.size), above]
        err = 1.0 - score / total
        b = int(np.argmin(err))
        cand = (float(err[b]), f, 0.5 * (sv[distinct[b]] + sv[distinct[b] + 1]),
                int(below[b]), int(above[b]))
        if best is None or cand[0] < best[0]:
            best = cand
    if best is None:
        # all features constant: constant stump on the heaviest class
        c = int(np.argmax(total_per_class))
        return Stump(0, math.inf, c, c)
    _, f, thr, lo_c, hi_c = best
    return Stump(f, thr, lo_c, hi_c)


def _fit_rusboost(X, y, classes, n_rounds, seed):
    k = classes.size
    y_idx = np.searchsorted(classes, y)
    n = X.shape[0]
    counts = np.bincount(y_idx, minlength=k)
    n_min = int(counts.min())
    w = np.full(n, 1.0 / n)
    stumps: list[Stump] = []
    alphas: list[float] = []
    for t in range(n_rounds):
        rng = np.random.default_rng((seed, t))
        chosen = []
        for ci in range(k):
            members = np.flatnonzero(y_idx == ci)
            if members.size <= n_min:
                chosen.append(members)
            else:
                p = w[members] / w[members].sum()
                chosen.append(rng.choice(members, size=n_min, replace=False, p=p))
        sub = np.concatenate(chosen)
        sub_w = w[sub] / w[sub].sum()
        stump = _fit_stump(X[sub], y_idx[sub], sub_w, k)

        miss = stump.predict(X) != y_idx
        err = float(np.sum(w[miss]))
        if err >= 1.0 - 1.0 / k:
            continue  # weaker than chance on this round's weights; redraw
        err = max(err, 1e-10)
        alpha = math.log((1.0 - err) / err) + math.log(k - 1.0)
        stumps.append(stump)
        alphas.append(alpha)
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    if not stumps:
        raise InvalidSpecError("no boosting round beat chance; data degenerate")
    return stumps, np.array(alphas)


def fit_multiclass(train: FeatureMatrix, kind: str, seed: int = 0,
                   n_rounds: int = 50,
                   svm_kernel: KernelSpec = KernelSpec("rbf"),
                   svm_C: float = 1.0,
                   svm_tol: float = 1e-3,
                   svm_max_passes: int = 100) -> MultiClassModel:
    """Train one of the three multi-class kinds on integer class labels."""
    if kind not in KINDS:
        raise InvalidSpecError(f"unknown multiclass kind {kind!r}")
    X = train.X
    y = np.asarray(train.y, dtype=int)
    classes = np.unique(y)
    if classes.size < 2:
        raise InvalidSpecError("need at least two classes")
    for c in classes:
        if np.sum(y == c) < 2:
            raise InvalidSpecError(f"class {c} has fewer than 2 samples")
    X, y = _canonicalize(X, y)

    if kind == "multi_lda":
        means, L, log_priors = _fit_multi_lda(X, y, classes)
        return MultiClassModel(kind=kind, classes=classes, means=means,
                               chol=L, log_priors=log_priors)
    if kind == "multi_svm":
        subs = []
        for c in classes:
            labels = np.where(y == c, 1.0, -1.0)
            subs.append(fit_svm(X, labels, C=svm_C, kernel=svm_kernel,
                                tol=svm_tol, max_passes=svm_max_passes))
        return MultiClassModel(kind=kind, classes=classes, submodels=subs)
    stumps, alphas = _fit_rusboost(X, y, classes, n_rounds, seed)
    return MultiClassModel(kind=kind, classes=classes, stumps=stumps,
                           stump_weights=alphas)


def predict_multiclass(model: MultiClassModel, x: np.ndarray) -> np.ndarray:
    """Argmax rule per kind; ties break toward the lower class index."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if model.kind == "multi_lda":
        if X.shape[1] != model.means.shape[1]:
            raise InvalidSpecError(
                f"expected {model.means.shape[1]} features, got {X.shape[1]}")
        scores = _multi_lda_scores(model, X)
    elif model.kind == "multi_svm":
        scores = np.stack([svm_decision(m, X) for m in model.submodels], axis=1)
    else:
        scores = np.zeros((X.shape[0], model.classes.size))
        for stump, alpha in zip(model.stumps, model.stump_weights):
            votes = stump.predict(X)
            scores[np.arange(X.shape[0]), votes] += alpha
    pred = model.classes[np.argmax(scores, axis=1)]
    return int(pred[0]) if single else pred


def collapse_to_binary(predictions: np.ndarray, mapping: dict | None = None) -> np.ndarray:
    """Fold multi-class outcomes onto the binary readout: default C2 -> 1."""
    if mapping is None:
        mapping = {0: 0, 1: 1, 2: 1}
    predictions = np.asarray(predictions)
    out = np.empty(predictions.shape, dtype=np.uint8)
    seen = np.zeros(predictions.shape, dtype=bool)
    for label, target in mapping.items():
        hit = predictions == label
        out[hit] = target
        seen |= hit
    if not np.all(seen):
        bad = np.unique(predictions[~seen])
        raise InvalidSpecError(f"labels {bad.tolist()} missing from mapping")
    return out
