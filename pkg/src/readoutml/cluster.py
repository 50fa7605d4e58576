"""k-means over single-class trajectory vectors, and the T1 diagnosis tools.

Lloyd iterations with k-means++ seeding ("seeded-random") or an averaged
multi-run init ("stabilized") that removes seed-to-seed wobble: Lloyd from a
fixed init is fully deterministic, so downstream numbers repeat exactly.
The excited-class clustering exposes the decayed-shot subclass; clusters are
flagged by comparing their late-time mean against the two pointer steady
states.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .errors import EmptyPoolError, InvalidSpecError
from .features import FeatureMatrix, unvectorize, vectorize_samples
from .sim import Dataset, PointerPaths

__all__ = [
    "Clustering",
    "SubclassReport",
    "kmeans",
    "stabilized_init",
    "subclass_report",
    "identify_special_clusters",
    "lift_to_multiclass",
    "LiftedLabels",
    "replace_t1_events",
]


@dataclass
class Clustering:
    k: int
    assignments: np.ndarray
    cluster_means: np.ndarray
    objective: float
    source_class: int | None
    objective_history: list = field(default_factory=list)
    n_iter: int = 0

    def indices(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


@dataclass
class SubclassReport:
    """Per-cluster audit: size, mean path, late-time endpoint, event flags."""

    sizes: np.ndarray
    mean_trajectories: np.ndarray
    late_endpoints: np.ndarray
    t1_candidate: np.ndarray
    heating_candidate: np.ndarray
    source_class: int | None
    late_fraction: float = 0.2

    @property
    def k(self) -> int:
        return self.sizes.size


def _as_rows(data) -> tuple[np.ndarray, int | None]:
    if isinstance(data, FeatureMatrix):
        labels = np.unique(data.y)
        src = int(labels[0]) if labels.size == 1 else None
        return data.X, src
    return np.asarray(data, dtype=float), None


def _sq_dists(X: np.ndarray, means: np.ndarray) -> np.ndarray:
    d2 = (np.sum(X**2, axis=1)[:, None] + np.sum(means**2, axis=1)[None, :]
          - 2.0 * (X @ means.T))
    np.clip(d2, 0.0, None, out=d2)
    return d2


def _plusplus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1])[:, 0]
    for c in range(1, k):
        total = float(np.sum(closest))
        if total <= 0.0:
            centers[c] = X[rng.integers(n)]
        else:
            centers[c] = X[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, _sq_dists(X, centers[c:c + 1])[:, 0])
    return centers


def kmeans(data, k: int, init="stabilized", max_iter: int = 300,
           seed: int = 0, realizations: int = 10) -> Clustering:
    """Lloyd's algorithm on rows of a single class.

    init is "stabilized", "seeded-random", or an explicit (k, p) array of
    starting means.  Empty clusters are repaired by reseeding at the point
    currently farthest from its own center.
    """
    X, src = _as_rows(data)
    if k < 1:
        raise InvalidSpecError(f"k must be positive, got {k}")
    if X.ndim != 2 or X.shape[0] < k:
        raise InvalidSpecError(f"need at least k={k} rows, got {X.shape[0]}")
    if max_iter < 1:
        raise InvalidSpecError(f"max_iter must be >= 1, got {max_iter}")

    if isinstance(init, str):
        if init == "stabilized":
            means = stabilized_init(X, k, realizations=realizations, seed=seed)
        elif init == "seeded-random":
            means = _plusplus_init(X, k, np.random.default_rng(seed))
        else:
            raise InvalidSpecError(f"unknown init {init!r}")
    else:
        means = np.array(init, dtype=float)
        if means.shape != (k, X.shape[1]):
            raise InvalidSpecError(
                f"init means shape {means.shape} != ({k}, {X.shape[1]})")

    assign = np.full(X.shape[0], -1)
    history = []
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(X, means)
        new_assign = np.argmin(d2, axis=1)

        # repair: move the globally farthest point into each empty slot
        counts = np.bincount(new_assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            dist_own = d2[np.arange(X.shape[0]), new_assign].copy()
            dist_own[counts[new_assign] <= 1] = -1.0  # keep donors nonempty
            donor = int(np.argmax(dist_own))
            counts[new_assign[donor]] -= 1
            new_assign[donor] = empty
            counts[empty] = 1
            means[empty] = X[donor]
            d2[:, empty] = _sq_dists(X, X[donor:donor + 1])[:, 0]

        history.append(float(np.sum(d2[np.arange(X.shape[0]), new_assign])))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        means = np.stack([X[assign == c].mean(axis=0) for c in range(k)])

    objective = float(np.sum(
        np.sum((X - means[assign])**2, axis=1)))
    return Clustering(k=k, assignments=assign, cluster_means=means,
                      objective=objective, source_class=src,
                      objective_history=history, n_iter=it)


def _greedy_match(ref: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Permutation p with means[p[s]] the greedy nearest match of ref[s]."""
    k = ref.shape[0]
    d = _sq_dists(means, ref)  # d[j, s]
    perm = np.full(k, -1)
    used_j = np.zeros(k, dtype=bool)
    used_s = np.zeros(k, dtype=bool)
    flat = np.argsort(d, axis=None, kind="stable")
    for f in flat:
        j, s = divmod(int(f), k)
        if used_j[j] or used_s[s]:
            continue
        perm[s] = j
        used_j[j] = True
        used_s[s] = True
    return perm


def stabilized_init(data, k: int, realizations: int = 10,
                    seed: int = 0) -> np.ndarray:
    """Average of greedily aligned means over independent seeded runs."""
    X, _ = _as_rows(data)
    if realizations < 1:
        raise InvalidSpecError(f"realizations must be >= 1, got {realizations}")
    acc = None
    ref = None
    for r in range(realizations):
        run = kmeans(X, k, init="seeded-random", seed=(seed, r))
        means = run.cluster_means
        if ref is None:
            ref = means
            acc = means.copy()
        else:
            acc += means[_greedy_match(ref, means)]
    return acc / realizations


def subclass_report(clustering: Clustering,
                    late_fraction: float = 0.2) -> SubclassReport:
    """Summarize a clustering of complex-valued trajectory rows."""
    if not 0.0 < late_fraction <= 1.0:
        raise InvalidSpecError(f"late_fraction must be in (0, 1], got {late_fraction}")
    mean_traj = unvectorize(clustering.cluster_means)
    n_bins = mean_traj.shape[1]
    window = max(1, int(round(late_fraction * n_bins)))
    late = mean_traj[:, -window:].mean(axis=1)
    k = clustering.k
    return SubclassReport(sizes=clustering.sizes(),
                          mean_trajectories=mean_traj,
                          late_endpoints=late,
                          t1_candidate=np.zeros(k, dtype=bool),
                          heating_candidate=np.zeros(k, dtype=bool),
                          source_class=clustering.source_class,
                          late_fraction=late_fraction)


def identify_special_clusters(clustering: Clustering,
                              report: SubclassReport,
                              pointer_refs: PointerPaths) -> SubclassReport:
    """Flag clusters whose late-time mean sits nearer the opposite steady state.

    Excited-class clusters get t1_candidate flags; ground-class clusters get
    heating_candidate flags.  Zero flags is a valid outcome.
    """
    if clustering.source_class not in (0, 1):
        raise InvalidSpecError("clustering must come from a single labeled class")
    n_bins = pointer_refs.alpha0.shape[0]
    window = max(1, int(round(report.late_fraction * n_bins)))
    ref0 = pointer_refs.alpha0[-window:].mean()
    ref1 = pointer_refs.alpha1[-window:].mean()

    d_ground = np.abs(report.late_endpoints - ref0)
    d_excited = np.abs(report.late_endpoints - ref1)
    t1 = np.zeros(report.k, dtype=bool)
    heating = np.zeros(report.k, dtype=bool)
    if clustering.source_class == 1:
        t1 = d_ground < d_excited
    else:
        heating = d_excited < d_ground
    return dc_replace(report, t1_candidate=t1, heating_candidate=heating)


@dataclass
class LiftedLabels:
    """Dataset-wide 3-class labels with the bookkeeping to collapse back."""

    features: FeatureMatrix
    excited_indices: np.ndarray
    t1_cluster_id: int
    binary_map: dict

    def collapse(self, predictions: np.ndarray) -> np.ndarray:
        from .ensemble import collapse_to_binary
        return collapse_to_binary(predictions, self.binary_map)


def lift_to_multiclass(dataset: Dataset, excited_clustering: Clustering,
                       t1_cluster_id: int) -> LiftedLabels:
    """Relabel: C0 = ground, C2 = flagged excited cluster, C1 = rest of excited."""
    if not 0 <= t1_cluster_id < excited_clustering.k:
        raise InvalidSpecError(
            f"cluster id {t1_cluster_id} out of range for k={excited_clustering.k}")
    excited = dataset.class_indices(1)
    if excited_clustering.assignments.shape[0] != excited.size:
        raise InvalidSpecError(
            "clustering does not cover the dataset's excited class")
    labels = dataset.labels.astype(np.uint8).copy()
    labels[excited[excited_clustering.assignments == t1_cluster_id]] = 2
    fm = FeatureMatrix(vectorize_samples(dataset.samples), labels)
    return LiftedLabels(features=fm, excited_indices=excited,
                        t1_cluster_id=t1_cluster_id,
                        binary_map={0: 0, 1: 1, 2: 1})


def replace_t1_events(dataset: Dataset, t1_indices: np.ndarray,
                      seed: int = 0) -> Dataset:
    """Overwrite flagged excited shots with uniform draws from the other
    excited shots; everything else is copied bitwise."""
    t1_indices = np.asarray(t1_indices, dtype=int)
    excited = dataset.class_indices(1)
    if t1_indices.size and not np.all(np.isin(t1_indices, excited)):
        raise InvalidSpecError("replacement indices must lie in the excited class")
    samples = dataset.samples.copy()
    jump_records = list(dataset.jump_records)
    initial_states = dataset.initial_states.copy()
    if t1_indices.size:
        pool = np.setdiff1d(excited, t1_indices)
        if pool.size == 0:
            raise EmptyPoolError("no unflagged excited shots to draw from")
        rng = np.random.default_rng(seed)
        sources = pool[rng.integers(pool.size, size=t1_indices.size)]
        samples[t1_indices] = dataset.samples[sources]
        initial_states[t1_indices] = dataset.initial_states[sources]
        for dst, source in zip(t1_indices, sources):
            jump_records[dst] = dataset.jump_records[source]
    metadata = dict(dataset.metadata)
    if t1_indices.size:
        metadata["t1_replacement"] = {
            "seed": int(seed),
            "n_replaced": int(t1_indices.size),
            "pool": "unflagged excited shots",
        }
    return Dataset(spec=dataset.spec, seed=dataset.seed, samples=samples,
                   labels=dataset.labels.copy(), jump_records=jump_records,
                   initial_states=initial_states, metadata=metadata)
