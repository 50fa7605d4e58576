"""Soft-margin binary SVM trained by a from-scratch SMO dual solver.

Pair selection is maximal-violation: with F_i = y_i - sum_j a_j y_j K_ij,
the KKT conditions reduce to  max_L F  <=  b  <=  min_U F  where L collects
points whose constraint bounds b from below ({a=0, y=+1}, {a=C, y=-1}, free)
and U the mirror set.  Each step updates the worst pair analytically (Platt's
clipped two-variable solve) until the violation gap closes to 2*tol, which
guarantees the pointwise KKT tolerances:

    a_i = 0  =>  y_i f(x_i) >= 1 - tol
    0<a_i<C  =>  |y_i f(x_i) - 1| <= tol
    a_i = C  =>  y_i f(x_i) <= 1 + tol

Rows are canonically sorted before optimization so the fit is invariant
under permutation of the training set.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidSpecError, StratificationError
from .features import FeatureMatrix

__all__ = [
    "KernelSpec",
    "SvmModel",
    "median_heuristic_gamma",
    "fit_svm",
    "svm_decision",
    "svm_classify",
    "cross_validate",
]

GRAM_PRECOMPUTE_LIMIT = 8192
DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class KernelSpec:
    """kind 'linear' or 'rbf'; rbf uses k(x,z) = exp(-gamma ||x-z||^2).

    gamma None defers to the median heuristic at fit time.
    """

    kind: str = "linear"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise InvalidSpecError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and self.gamma is not None:
            if not (np.isfinite(self.gamma) and self.gamma > 0):
                raise InvalidSpecError(f"rbf gamma must be finite positive, got {self.gamma}")
        if self.kind == "linear" and self.gamma is not None:
            raise InvalidSpecError("linear kernel takes no gamma")


def median_heuristic_gamma(X: np.ndarray, max_rows: int = 1000) -> float:
    """1 / median pairwise squared distance, on an evenly spaced subsample."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise InvalidSpecError("median heuristic needs at least 2 rows")
    if n > max_rows:
        X = X[np.linspace(0, n - 1, max_rows).astype(int)]
    sq = np.sum(X**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    iu = np.triu_indices(X.shape[0], k=1)
    pos = d2[iu]
    pos = pos[pos > 0]
    if pos.size == 0:
        raise InvalidSpecError("all subsampled rows identical; no length scale")
    return float(1.0 / np.median(pos))


def _kernel_block(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if spec.kind == "linear":
        return A @ B.T
    d2 = (np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :]
          - 2.0 * (A @ B.T))
    np.clip(d2, 0.0, None, out=d2)
    return np.exp(-spec.gamma * d2)


class _GramSource:
    """Kernel rows for SMO: full matrix when it fits, else an LRU row cache."""

    def __init__(self, X: np.ndarray, spec: KernelSpec,
                 precompute_limit: int = GRAM_PRECOMPUTE_LIMIT):
        self.X = X
        self.spec = spec
        n = X.shape[0]
        self.diag = None
        if n <= precompute_limit:
            self.full = _kernel_block(spec, X, X)
            self.diag = np.diag(self.full).copy()
        else:
            self.full = None
            self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
            # keep the cache near the full-matrix memory budget
            self._cap = max(64, precompute_limit**2 // n)
            if spec.kind == "linear":
                self.diag = np.sum(X**2, axis=1)
            else:
                self.diag = np.ones(n)

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        got = self._cache.get(i)
        if got is not None:
            self._cache.move_to_end(i)
            return got
        r = _kernel_block(self.spec, self.X[i:i + 1], self.X)[0]
        self._cache[i] = r
        if len(self._cache) > self._cap:
            self._cache.popitem(last=False)
        return r


@dataclass
class SvmModel:
    """Sparse dual solution: only rows with alpha > 0 are kept."""

    kernel: KernelSpec
    C: float
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    n_iter: int
    kkt_gap: float

    @property
    def n_support(self) -> int:
        return self.support_vectors.shape[0]


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    keys = [(X[i].tobytes(), int(y[i])) for i in range(X.shape[0])]
    return np.array(sorted(range(X.shape[0]), key=keys.__getitem__), dtype=int)


def fit_svm(train: FeatureMatrix | np.ndarray,
            labels: np.ndarray | None = None,
            C: float = 1.0,
            kernel: KernelSpec = KernelSpec("linear"),
            tol: float = 1e-3,
            max_passes: int = 100,
            seed: int = 0,
            precompute_limit: int = GRAM_PRECOMPUTE_LIMIT) -> SvmModel:
    """Solve the soft-margin dual for labels in {-1, +1}.

    max_passes bounds the work at max_passes * n pair updates.  seed is
    accepted for interface stability; maximal-violation selection is already
    deterministic, so it is unused.
    """
    if isinstance(train, FeatureMatrix):
        X = train.X
        if labels is None:
            labels = np.where(train.y == 0, 1, -1)
    else:
        X = np.asarray(train, dtype=float)
    if labels is None:
        raise InvalidSpecError("labels required")
    y = np.asarray(labels, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise InvalidSpecError("train rows and labels must align")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InvalidSpecError("labels must be -1 or +1")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise InvalidSpecError("both classes required")
    if C <= 0:
        raise InvalidSpecError(f"C must be positive, got {C}")

    if kernel.kind == "rbf" and kernel.gamma is None:
        kernel = KernelSpec("rbf", median_heuristic_gamma(X))

    order = _canonical_order(X, y)
    X = np.ascontiguousarray(X[order])
    y = y[order]
    n = X.shape[0]

    gram = _GramSource(X, kernel, precompute_limit)
    alpha = np.zeros(n)
    g = np.zeros(n)  # sum_j alpha_j y_j K_ij, maintained incrementally
    max_iter = max_passes * n
    refresh_every = 8192
    # float residue below box_eps counts as at-bound; a "free" point with
    # alpha ~ 1e-18 has no transferable mass and would stall pair selection
    box_eps = 1e-12 * C
    it = 0
    gap = np.inf

    def exact_g() -> np.ndarray:
        if gram.full is not None:
            return gram.full @ (alpha * y)
        live = alpha > 0
        if not np.any(live):
            return np.zeros(n)
        coef = alpha[live] * y[live]
        sv = X[live]
        out = np.empty(n)
        for lo_row in range(0, n, 4096):
            block = X[lo_row:lo_row + 4096]
            out[lo_row:lo_row + 4096] = _kernel_block(kernel, block, sv) @ coef
        return out

    while it < max_iter:
        if it and it % refresh_every == 0:
            g = exact_g()
        F = y - g
        at_lo = alpha <= box_eps
        at_hi = alpha >= C - box_eps
        free = ~at_lo & ~at_hi
        lower = free | (at_lo & (y > 0)) | (at_hi & (y < 0))
        upper = free | (at_lo & (y < 0)) | (at_hi & (y > 0))
        i = int(np.argmax(np.where(lower, F, -np.inf)))
        j = int(np.argmin(np.where(upper, F, np.inf)))
        gap = F[i] - F[j]
        if gap <= 2.0 * tol:
            # confirm against exactly recomputed scores before accepting
            g = exact_g()
            F = y - g
            i = int(np.argmax(np.where(lower, F, -np.inf)))
            j = int(np.argmin(np.where(upper, F, np.inf)))
            gap = F[i] - F[j]
            if gap <= 2.0 * tol:
                break

        Ki = gram.row(i)
        Kj = gram.row(j)
        eta = gram.diag[i] + gram.diag[j] - 2.0 * Ki[j]
        e_diff = -gap  # E_i - E_j with the bias cancelled
        if y[i] != y[j]:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(C, C + alpha[j] - alpha[i])
        else:
            lo = max(0.0, alpha[i] + alpha[j] - C)
            hi = min(C, alpha[i] + alpha[j])
        if eta > 1e-12:
            aj = alpha[j] + y[j] * e_diff / eta
        else:
            # flat direction: slide to whichever box edge the gradient favors
            aj = hi if y[j] * e_diff > 0 else lo
        aj = min(max(aj, lo), hi)
        dj = aj - alpha[j]
        di = -y[i] * y[j] * dj
        alpha[j] = aj
        alpha[i] += di
        g += (di * y[i]) * Ki + (dj * y[j]) * Kj
        it += 1
    else:
        raise ConvergenceError(
            f"SMO failed to reach tol {tol} in {max_iter} updates", gap / 2.0)

    F = y - g
    lower = ((alpha < C - box_eps) & (y > 0)) | ((alpha > box_eps) & (y < 0))
    upper = ((alpha < C - box_eps) & (y < 0)) | ((alpha > box_eps) & (y > 0))
    b_floor = float(np.max(np.where(lower, F, -np.inf)))
    b_ceil = float(np.min(np.where(upper, F, np.inf)))
    if not np.isfinite(b_floor):
        bias = b_ceil
    elif not np.isfinite(b_ceil):
        bias = b_floor
    else:
        bias = 0.5 * (b_floor + b_ceil)

    sv = alpha > box_eps
    return SvmModel(kernel=kernel, C=float(C),
                    support_vectors=X[sv].copy(),
                    dual_coef=(alpha[sv] * y[sv]),
                    bias=bias, n_iter=it, kkt_gap=float(gap))


def svm_decision(model: SvmModel, x: np.ndarray) -> float | np.ndarray:
    """f(x) = sum_i alpha_i y_i k(x_i, x) + b."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if model.n_support and X.shape[1] != model.support_vectors.shape[1]:
        raise InvalidSpecError(
            f"expected {model.support_vectors.shape[1]} features, got {X.shape[1]}")
    if model.n_support:
        f = np.empty(X.shape[0])
        for lo in range(0, X.shape[0], 4096):
            block = X[lo:lo + 4096]
            f[lo:lo + 4096] = (_kernel_block(model.kernel, block,
                                             model.support_vectors)
                               @ model.dual_coef)
        f += model.bias
    else:
        f = np.full(X.shape[0], model.bias)
    return float(f[0]) if single else f


def svm_classify(model: SvmModel, x: np.ndarray) -> int | np.ndarray:
    """Sign of the decision value; ties go to the +1 class."""
    f = svm_decision(model, x)
    if np.isscalar(f):
        return 1 if f >= 0 else -1
    return np.where(f >= 0, 1, -1).astype(int)


def cross_validate(train: FeatureMatrix | np.ndarray,
                   labels: np.ndarray,
                   C_grid=DEFAULT_C_GRID,
                   gamma_grid=None,
                   folds: int = 10,
                   seed: int = 0,
                   kind: str = "rbf",
                   tol: float = 1e-3,
                   max_passes: int = 100):
    """Stratified k-fold grid search; returns (best_C, best_gamma, cv_error).

    Ties break toward smaller C, then smaller gamma.  gamma_grid None uses
    the median heuristic scaled by (1/4, 1, 4) for rbf, or a single None
    entry for the linear kernel.
    """
    X = train.X if isinstance(train, FeatureMatrix) else np.asarray(train, dtype=float)
    y = np.asarray(labels, dtype=float)
    n = X.shape[0]
    if folds < 2:
        raise InvalidSpecError(f"folds must be >= 2, got {folds}")
    if len(C_grid) == 0:
        raise InvalidSpecError("empty C grid")

    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    for cls in (-1.0, 1.0):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        fold_of[idx] = np.arange(idx.size) % folds
    for f in range(folds):
        held = fold_of == f
        for part in (held, ~held):
            if not (np.any(y[part] == 1) and np.any(y[part] == -1)):
                raise StratificationError(
                    f"fold {f} leaves a class empty; use fewer folds")

    if gamma_grid is None:
        if kind == "linear":
            gamma_grid = (None,)
        else:
            g = median_heuristic_gamma(X)
            gamma_grid = (g / 4.0, g, 4.0 * g)
    gammas = sorted({g for g in gamma_grid}, key=lambda g: (g is not None, g))
    if not gammas:
        raise InvalidSpecError("empty gamma grid")

    best = None
    for C in sorted(set(C_grid)):
        for gamma in gammas:
            spec = KernelSpec(kind) if gamma is None else KernelSpec(kind, gamma)
            errs = []
            for f in range(folds):
                held = fold_of == f
                model = fit_svm(X[~held], y[~held], C=C, kernel=spec,
                                tol=tol, max_passes=max_passes)
                pred = svm_classify(model, X[held])
                errs.append(float(np.mean(pred != y[held])))
            cv_err = float(np.mean(errs))
            if best is None or cv_err < best[2]:
                best = (float(C), gamma, cv_err)
    return best
