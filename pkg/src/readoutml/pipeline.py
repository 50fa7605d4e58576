"""End-to-end training/evaluation recipes for every classifier variant.

A recipe owns its preprocessing: the caller picks a method name and whether
PCA runs in front, and gets back a fidelity report scored on the held-out
half.  The split is positional per class (first half trains), mirroring how
time-ordered shots are consumed in practice; a shuffled split exists for
repeat studies.  Multi-class recipes share one k-means lift of the excited
class per evaluation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import cluster as _cluster
from . import discriminant as _discriminant
from . import ensemble as _ensemble
from . import features as _features
from . import metrics as _metrics
from . import svm as _svm
from .errors import EmptyPoolError, InvalidSpecError, SingularCovarianceError
from .features import FeatureMatrix
from .metrics import FidelityReport
from .sim import Dataset, observed_mean_paths

METHOD_NAMES = ("ldad", "lda", "qdad", "qda", "svm-linear", "svm-rbf",
                "multi-lda", "multi-svm", "rusboost", "matched-filter")

# preprocessing used for the canonical one-row-per-method table: full-rank
# methods run raw; qda and multi-lda need the reduced space to be nonsingular
# and the ensemble methods use it for tractable stump/gram sizes
DEFAULT_PCA = {"qda": True, "multi-lda": True, "multi-svm": True,
               "rusboost": True}

LDA_SHRINKAGE = 1e-6
SVM_LINEAR_C = 0.1
SVM_RBF_C = 10.0
RBF_CV_C_GRID = (1.0, 10.0, 100.0)
PCA_VARIANCE_FRACTION = 0.999
SINGULAR_CELL = "error: singular covariance"


def split_indices(labels: np.ndarray, shuffle: bool = False,
                  seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-class positional halves: first half trains, second half tests."""
    labels = np.asarray(labels)
    train, test = [], []
    rng = np.random.default_rng(seed) if shuffle else None
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        if idx.size < 2:
            raise InvalidSpecError(
                f"class {lab} has {idx.size} shots; cannot split")
        if rng is not None:
            idx = rng.permutation(idx)
        half = idx.size // 2
        train.append(idx[:half])
        test.append(idx[half:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass
class EvaluationOutcome:
    """One table cell: a method, its preprocessing, and how it scored."""

    method: str
    pca: bool
    report: FidelityReport | None
    error: str | None = None
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def f_a(self) -> float | None:
        return None if self.report is None else self.report.f_a


class EvalContext:
    """Shared split, PCA fit, and excited-class lift for one evaluation."""

    def __init__(self, dataset: Dataset, seed: int = 0, shuffle: bool = False,
                 k: int = 3, lift_realizations: int = 10):
        self.dataset = dataset
        self.seed = seed
        self.k = k
        self.lift_realizations = lift_realizations
        self.fm = _features.vectorize(dataset)
        self.train_idx, self.test_idx = split_indices(
            self.fm.y, shuffle=shuffle, seed=seed)
        self.train = self.fm.subset(self.train_idx)
        self.test = self.fm.subset(self.test_idx)
        self._pca = None
        self._lift = None
        self._clustering = None
        self._flags = None

    @property
    def pca(self) -> _features.PcaModel:
        if self._pca is None:
            self._pca = _features.fit_pca(
                self.train.X, variance_fraction=PCA_VARIANCE_FRACTION)
        return self._pca

    def halves(self, pca: bool) -> tuple[FeatureMatrix, np.ndarray]:
        if not pca:
            return self.train, self.test.X
        return (_features.project_features(self.pca, self.train),
                _features.project(self.pca, self.test.X))

    def excited_clustering(self):
        """k-means over the full excited class plus its special-cluster flags."""
        if self._clustering is None:
            excited = self.fm.subset(np.flatnonzero(self.fm.y == 1))
            clustering = _cluster.kmeans(
                excited, self.k, init="stabilized", seed=self.seed,
                realizations=self.lift_realizations)
            report = _cluster.subclass_report(clustering)
            paths = observed_mean_paths(self.dataset.spec.cavity,
                                        self.dataset.grid,
                                        self.dataset.spec.noise)
            self._flags = _cluster.identify_special_clusters(
                clustering, report, paths)
            self._clustering = clustering
        return self._clustering, self._flags

    def t1_cluster_id(self) -> int | None:
        clustering, flags = self.excited_clustering()
        candidates = np.flatnonzero(flags.t1_candidate)
        if candidates.size == 0:
            return None
        sizes = clustering.sizes()
        return int(candidates[np.argmax(sizes[candidates])])

    def lifted(self):
        """Three-class labels over the whole dataset, or None when no flag."""
        if self._lift is None:
            t1 = self.t1_cluster_id()
            if t1 is None:
                return None
            clustering, _ = self.excited_clustering()
            self._lift = _cluster.lift_to_multiclass(
                self.dataset, clustering, t1)
        return self._lift


def _binary_from_signs(signs: np.ndarray) -> np.ndarray:
    # fit_svm maps class 0 to +1
    return np.where(np.asarray(signs) == 1, 0, 1)


def _run_matched_filter(ctx: EvalContext, pca: bool, options: dict):
    dt = ctx.dataset.grid.dt
    c_train = _features.unvectorize(ctx.train.X)
    c_test = _features.unvectorize(ctx.test.X)
    kernel = _features.optimal_kernel((c_train, ctx.train.y, dt))
    s_train = _features.matched_filter_statistic(c_train, kernel)
    s_test = _features.matched_filter_statistic(c_test, kernel)
    mu0 = float(np.mean(s_train[ctx.train.y == 0]))
    mu1 = float(np.mean(s_train[ctx.train.y == 1]))
    threshold = 0.5 * (mu0 + mu1)
    if mu0 >= mu1:
        pred = np.where(s_test >= threshold, 0, 1)
    else:
        pred = np.where(s_test >= threshold, 1, 0)
    return pred, {"threshold": threshold}


def _run_discriminant(kind: str, shrinkage: float = 0.0):
    def run(ctx: EvalContext, pca: bool, options: dict):
        train, test_X = ctx.halves(pca)
        model = _discriminant.fit_gaussian(train, kind=kind,
                                           shrinkage=shrinkage)
        pred = _discriminant.classify(model, test_X)
        return pred, {"condition_numbers": list(model.condition_numbers),
                      "shrinkage": shrinkage}
    return run


def _run_svm(kernel_kind: str):
    def run(ctx: EvalContext, pca: bool, options: dict):
        train, test_X = ctx.halves(pca)
        y = np.where(train.y == 0, 1.0, -1.0)
        details: dict = {}
        if kernel_kind == "linear":
            C, spec = SVM_LINEAR_C, _svm.KernelSpec("linear")
        elif options.get("cv"):
            gamma = _svm.median_heuristic_gamma(train.X)
            C, best_gamma, cv_err = _svm.cross_validate(
                train.X, y, C_grid=RBF_CV_C_GRID,
                gamma_grid=(gamma / 4.0, gamma, 4.0 * gamma),
                folds=options.get("cv_folds", 5), seed=ctx.seed,
                kind="rbf", max_passes=options.get("max_passes", 100))
            spec = _svm.KernelSpec("rbf", best_gamma)
            details.update(cv_error=cv_err, gamma=best_gamma)
        else:
            gamma = _svm.median_heuristic_gamma(train.X)
            C, spec = SVM_RBF_C, _svm.KernelSpec("rbf", gamma)
            details["gamma"] = gamma
        model = _svm.fit_svm(train.X, y, C=C, kernel=spec,
                             max_passes=options.get("max_passes", 100))
        details.update(C=C, n_support=model.n_support,
                       kkt_gap=model.kkt_gap)
        return _binary_from_signs(_svm.svm_classify(model, test_X)), details
    return run


def _run_multiclass(kind: str):
    def run(ctx: EvalContext, pca: bool, options: dict):
        lift = ctx.lifted()
        details: dict = {}
        if lift is None:
            # no flagged T1 cluster: train the same machinery on {C0, C1}
            fm3 = ctx.fm
            details["lift"] = "degenerate-binary"
        else:
            fm3 = lift.features
            details["lift"] = {"t1_cluster": lift.t1_cluster_id,
                               "n_c2": int(np.sum(fm3.y == 2))}
        train3 = fm3.subset(ctx.train_idx)
        test_X = ctx.fm.X[ctx.test_idx]
        if pca:
            train3 = _features.project_features(ctx.pca, train3)
            test_X = _features.project(ctx.pca, test_X)
        model = _ensemble.fit_multiclass(
            train3, kind=kind, seed=ctx.seed,
            n_rounds=options.get("rounds", 50),
            svm_C=options.get("svm_C", 1.0))
        pred3 = _ensemble.predict_multiclass(model, test_X)
        pred = (lift.collapse(pred3) if lift is not None
                else _ensemble.collapse_to_binary(pred3))
        if kind == "rusboost":
            details["n_stumps"] = len(model.stumps)
        return pred, details
    return run


_RECIPES = {
    "matched-filter": _run_matched_filter,
    "ldad": _run_discriminant("ldad"),
    "lda": _run_discriminant("lda", shrinkage=LDA_SHRINKAGE),
    "qdad": _run_discriminant("qdad"),
    "qda": _run_discriminant("qda"),
    "svm-linear": _run_svm("linear"),
    "svm-rbf": _run_svm("rbf"),
    "multi-lda": _run_multiclass("multi_lda"),
    "multi-svm": _run_multiclass("multi_svm"),
    "rusboost": _run_multiclass("rusboost"),
}

assert set(_RECIPES) == set(METHOD_NAMES)


def run_method(ctx: EvalContext, method: str, pca: bool | None = None,
               **options) -> EvaluationOutcome:
    """Train one method on the context's train half and score the test half.

    ``pca`` None takes the method's canonical preprocessing.  A singular
    covariance becomes an error cell instead of an exception, mirroring how
    the full-dimension QDA column is reported.
    """
    if method not in _RECIPES:
        raise InvalidSpecError(
            f"unknown method {method!r}; valid: {', '.join(METHOD_NAMES)}")
    use_pca = DEFAULT_PCA.get(method, False) if pca is None else bool(pca)
    if method == "matched-filter":
        use_pca = False  # the kernel weights live on raw time bins
    start = time.perf_counter()
    try:
        pred, details = _RECIPES[method](ctx, use_pca, options)
    except SingularCovarianceError as exc:
        return EvaluationOutcome(
            method=method, pca=use_pca, report=None, error=SINGULAR_CELL,
            seconds=time.perf_counter() - start,
            details={"condition_number": exc.condition_number})
    if use_pca:
        details = dict(details, pca_d=ctx.pca.d)
    report = _metrics.assignment_fidelity(pred, ctx.test.y)
    return EvaluationOutcome(method=method, pca=use_pca, report=report,
                             seconds=time.perf_counter() - start,
                             details=details)


def evaluate_dataset(dataset: Dataset, methods=METHOD_NAMES,
                     pca: bool | None = None, seed: int = 0,
                     shuffle: bool = False, k: int = 3,
                     **options) -> list[EvaluationOutcome]:
    """One evaluation pass: shared split and lift, one outcome per method."""
    ctx = EvalContext(dataset, seed=seed, shuffle=shuffle, k=k)
    return [run_method(ctx, m, pca=pca, **options) for m in methods]


@dataclass(frozen=True)
class RepeatSummary:
    method: str
    pca: bool
    mean_f_a: float
    var_f_a: float
    n_repeats: int
    n_errors: int


def repeat_evaluations(dataset: Dataset, methods=METHOD_NAMES,
                       repeats: int = 100, pca: bool | None = None,
                       seed: int = 0, k: int = 3,
                       **options) -> list[RepeatSummary]:
    """Shuffled-split repetitions; sample mean and variance per method."""
    if repeats < 1:
        raise InvalidSpecError(f"repeats must be >= 1, got {repeats}")
    values: dict[str, list[float]] = {m: [] for m in methods}
    errors: dict[str, int] = {m: 0 for m in methods}
    pca_used: dict[str, bool] = {}
    for rep in range(repeats):
        ctx = EvalContext(dataset, seed=_derive_seed(seed, rep), shuffle=True,
                          k=k)
        for m in methods:
            out = run_method(ctx, m, pca=pca, **options)
            pca_used[m] = out.pca
            if out.report is None:
                errors[m] += 1
            else:
                values[m].append(out.report.f_a)
    summaries = []
    for m in methods:
        v = np.array(values[m])
        summaries.append(RepeatSummary(
            method=m, pca=pca_used[m],
            mean_f_a=float(v.mean()) if v.size else float("nan"),
            var_f_a=float(v.var(ddof=1)) if v.size > 1 else 0.0,
            n_repeats=repeats, n_errors=errors[m]))
    return summaries


def _derive_seed(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence((seed, rep)).generate_state(1)[0])


@dataclass
class DiagnosisResult:
    clustering: _cluster.Clustering
    flags: _cluster.SubclassReport
    t1_cluster_id: int | None
    flagged_indices: np.ndarray
    outcomes: list[EvaluationOutcome] | None
    replacement_summaries: list[RepeatSummary] | None = None


def diagnose_dataset(dataset: Dataset, k: int = 3, replace: bool = False,
                     methods=METHOD_NAMES, seed: int = 0, repeats: int = 1,
                     pca: bool | None = None, **options) -> DiagnosisResult:
    """Cluster the excited class; optionally replace the T1 cluster and
    re-evaluate every method on the replaced dataset.

    ``repeats`` > 1 redraws the replacement with derived seeds and reports
    mean/variance, the protocol behind the replacement table.
    """
    ctx = EvalContext(dataset, seed=seed, k=k)
    clustering, flags = ctx.excited_clustering()
    t1 = ctx.t1_cluster_id()
    excited = np.flatnonzero(ctx.fm.y == 1)
    flagged = (excited[clustering.assignments == t1] if t1 is not None
               else np.array([], dtype=int))
    if not replace:
        return DiagnosisResult(clustering=clustering, flags=flags,
                               t1_cluster_id=t1, flagged_indices=flagged,
                               outcomes=None)
    if t1 is None:
        raise EmptyPoolError(
            f"k={k} clustering flagged no decay cluster; nothing to replace")
    values: dict[str, list[float]] = {m: [] for m in methods}
    errors: dict[str, int] = {m: 0 for m in methods}
    pca_used: dict[str, bool] = {}
    last_outcomes = None
    for rep in range(repeats):
        replaced = _cluster.replace_t1_events(
            dataset, flagged, seed=_derive_seed(seed, rep))
        last_outcomes = evaluate_dataset(replaced, methods=methods, pca=pca,
                                         seed=seed, k=k, **options)
        for out in last_outcomes:
            pca_used[out.method] = out.pca
            if out.report is None:
                errors[out.method] += 1
            else:
                values[out.method].append(out.report.f_a)
    summaries = None
    if repeats > 1:
        summaries = []
        for m in methods:
            v = np.array(values[m])
            summaries.append(RepeatSummary(
                method=m, pca=pca_used[m],
                mean_f_a=float(v.mean()) if v.size else float("nan"),
                var_f_a=float(v.var(ddof=1)) if v.size > 1 else 0.0,
                n_repeats=repeats, n_errors=errors[m]))
    return DiagnosisResult(clustering=clustering, flags=flags,
                           t1_cluster_id=t1, flagged_indices=flagged,
                           outcomes=last_outcomes,
                           replacement_summaries=summaries)


def method_recipe(method: str, pca: bool | None = None, seed: int = 0,
                  k: int = 3, **options):
    """Bind a method into a Dataset -> FidelityReport callable.

    This is the recipe shape the measurement-time sweep consumes; each call
    re-vectorizes, re-splits, and retrains from scratch on the (possibly
    truncated) dataset it is handed.
    """
    if method not in _RECIPES:
        raise InvalidSpecError(
            f"unknown method {method!r}; valid: {', '.join(METHOD_NAMES)}")

    def recipe(dataset: Dataset) -> FidelityReport:
        ctx = EvalContext(dataset, seed=seed, k=k)
        out = run_method(ctx, method, pca=pca, **options)
        if out.report is None:
            raise SingularCovarianceError(
                f"{method} cannot run on this dataset: {out.error}",
                out.details.get("condition_number", float("inf")))
        return out.report

    recipe.__name__ = f"recipe_{method.replace('-', '_')}"
    return recipe
