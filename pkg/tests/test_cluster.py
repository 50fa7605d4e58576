"""Clustering tests: Lloyd correctness against an exhaustive-partition oracle,
stabilized initialization, decay/heating subclass identification, class
lifting, and flagged-shot replacement."""

import numpy as np
import pytest

from readoutml import sim
from readoutml.cluster import (
    Clustering,
    identify_special_clusters,
    kmeans,
    lift_to_multiclass,
    replace_t1_events,
    stabilized_init,
    subclass_report,
)
from readoutml.ensemble import fit_multiclass, predict_multiclass
from readoutml.errors import EmptyPoolError, InvalidSpecError
from readoutml.features import FeatureMatrix, fit_pca, project, vectorize, vectorize_samples
from readoutml.metrics import assignment_fidelity

from oracles import exhaustive_kmeans


def _partition_sets(assignments):
    return {frozenset(np.flatnonzero(assignments == c).tolist())
            for c in np.unique(assignments)}


def _blob_instance(seed, n_per, k, centers, std=0.3):
    rng = np.random.default_rng(seed)
    return np.vstack([c + std * rng.standard_normal((n_per, 2))
                      for c in centers[:k]])


class TestKmeansCore:
    def test_k1_returns_the_mean_and_total_within_variance(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((40, 3))
        result = kmeans(X, k=1)
        assert np.allclose(result.cluster_means[0], X.mean(axis=0))
        assert result.objective == pytest.approx(
            float(np.sum((X - X.mean(axis=0))**2)), rel=1e-12)
        assert np.all(result.assignments == 0)

    def test_rectangle_corners_split_along_the_long_axis(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        result = kmeans(X, k=2)
        best_sse, best_assign = exhaustive_kmeans(X, 2)
        assert _partition_sets(result.assignments) == _partition_sets(best_assign)
        assert result.objective == pytest.approx(best_sse, rel=1e-12)
        assert _partition_sets(result.assignments) == {frozenset({0, 1}),
                                                       frozenset({2, 3})}

    @pytest.mark.parametrize("seed,n_per,k", [(1, 3, 3), (2, 4, 3), (3, 4, 2)])
    def test_small_instances_match_the_exhaustive_oracle(self, seed, n_per, k):
        X = _blob_instance(seed, n_per, k,
                           centers=[(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)])
        result = kmeans(X, k=k)
        best_sse, best_assign = exhaustive_kmeans(X, k)
        assert result.objective == pytest.approx(best_sse, rel=1e-9)
        assert _partition_sets(result.assignments) == _partition_sets(best_assign)

    def test_termination_is_a_single_move_fixed_point(self):
        X = _blob_instance(4, 4, 3, centers=[(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)])
        result = kmeans(X, k=3)

        def sse(assign):
            return sum(float(np.sum((X[assign == c] - X[assign == c].mean(0))**2))
                       for c in range(3) if np.any(assign == c))

        base = sse(result.assignments)
        for i in range(X.shape[0]):
            for c in range(3):
                if c == result.assignments[i]:
                    continue
                moved = result.assignments.copy()
                moved[i] = c
                if np.all(np.bincount(moved, minlength=3) > 0):
                    assert sse(moved) >= base - 1e-12

    def test_objective_history_is_non_increasing(self):
        rng = np.random.default_rng(8)
        X = np.vstack([rng.standard_normal((150, 2)),
                       rng.standard_normal((150, 2)) + [4.0, 0.0]])
        result = kmeans(X, k=3, init="seeded-random", seed=2)
        hist = np.array(result.objective_history)
        assert hist.size == result.n_iter
        assert np.all(np.diff(hist) <= 1e-9 * hist[0])

    def test_duplicate_far_initial_means_are_repaired(self):
        rng = np.random.default_rng(12)
        X = np.vstack([rng.standard_normal((20, 2)),
                       rng.standard_normal((20, 2)) + [8.0, 0.0]])
        init = np.array([[100.0, 100.0], [100.0, 100.0], [0.0, 0.0]])
        result = kmeans(X, k=3, init=init)
        assert np.all(result.sizes() >= 1)
        assert np.isfinite(result.objective)

    def test_fit_is_deterministic_given_seed(self):
        rng = np.random.default_rng(30)
        X = rng.standard_normal((60, 4))
        a = kmeans(X, k=3, init="seeded-random", seed=6)
        b = kmeans(X, k=3, init="seeded-random", seed=6)
        assert np.array_equal(a.assignments, b.assignments)
        assert np.array_equal(a.cluster_means, b.cluster_means)
        assert a.objective == b.objective


class TestStabilizedInit:
    def test_single_realization_returns_that_runs_means(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((50, 2))
        init = stabilized_init(X, k=2, realizations=1, seed=9)
        run = kmeans(X, k=2, init="seeded-random", seed=(9, 0))
        assert np.array_equal(init, run.cluster_means)

    def test_two_blobs_give_the_blob_centers(self):
        rng = np.random.default_rng(15)
        X = np.vstack([rng.standard_normal((100, 2)) * 0.5,
                       rng.standard_normal((100, 2)) * 0.5 + [6.0, 0.0]])
        init = stabilized_init(X, k=2, realizations=5, seed=0)
        got = init[np.argsort(init[:, 0])]
        assert np.allclose(got, [[0.0, 0.0], [6.0, 0.0]], atol=0.2)

    def test_lloyd_from_a_stabilized_init_repeats_exactly(self):
        rng = np.random.default_rng(16)
        X = rng.standard_normal((80, 3))
        runs = [kmeans(X, k=3, init="stabilized", seed=4) for _ in range(2)]
        assert np.array_equal(runs[0].assignments, runs[1].assignments)
        assert np.array_equal(runs[0].cluster_means, runs[1].cluster_means)
        assert runs[0].objective == runs[1].objective

    def test_realizations_must_be_positive(self):
        with pytest.raises(InvalidSpecError):
            stabilized_init(np.zeros((4, 2)), k=2, realizations=0)


def _downstream_fa(dataset, clustering):
    """Lift on a clustering of the excited class, fit multi-lda on even rows,
    score odd rows collapsed back to binary."""
    refs = sim.observed_mean_paths(dataset.spec.cavity, dataset.grid,
                                   dataset.spec.noise)
    flags = identify_special_clusters(clustering, subclass_report(clustering),
                                      refs)
    flagged = np.flatnonzero(flags.t1_candidate)
    assert flagged.size == 1
    lifted = lift_to_multiclass(dataset, clustering, int(flagged[0]))
    fm = lifted.features
    train = np.arange(0, fm.n_rows, 2)
    test = np.arange(1, fm.n_rows, 2)
    pca = fit_pca(fm.subset(train), variance_fraction=0.999)
    model = fit_multiclass(FeatureMatrix(project(pca, fm.X[train]), fm.y[train]),
                           kind="multi_lda")
    pred = predict_multiclass(model, project(pca, fm.X[test]))
    binary = lifted.collapse(pred)
    return assignment_fidelity(binary, dataset.labels[test]).f_a


class TestInitializationVariance:
    def test_stabilized_init_removes_downstream_wobble(self, paper_6400):
        fm = vectorize(paper_6400)
        excited_rows = fm.subset(paper_6400.class_indices(1))
        fixed = [kmeans(excited_rows, k=3, init="stabilized", seed=0)
                 for _ in range(2)]
        fa = [_downstream_fa(paper_6400, c) for c in fixed]
        assert fa[0] == fa[1]

        random_init = [kmeans(excited_rows, k=3, init="seeded-random", seed=s)
                       for s in range(5)]
        fa_rand = np.array([_downstream_fa(paper_6400, c) for c in random_init])
        assert float(np.var(fa_rand, ddof=1)) <= 1e-4


@pytest.fixture(scope="module")
def k3(excited_clustering_25600):
    return excited_clustering_25600


@pytest.fixture(scope="module")
def k4_25600(paper_25600):
    return kmeans(vectorize(paper_25600).subset(paper_25600.class_indices(1)),
                  k=4, init="stabilized", seed=0)


@pytest.fixture(scope="module")
def heated_25600():
    # heating time constant chosen for ~230 expected events among the
    # 12800 ground-prepared shots
    tau = -2.6e-6 / np.log(1.0 - 230.0 / 12800.0)
    spec = sim.default_dataset_spec(n_shots=25600, heating_time=tau)
    return sim.generate_dataset(spec, seed=19)


class TestDecaySubclass:
    def test_decay_cluster_size_tracks_the_jump_rate(self, k3):
        # 1 - exp(-2.6/29) = 8.58% of excited shots decay; clustering finds
        # fewer because late decays never leave the excited blob's basin.
        clustering, flags = k3
        t1 = int(np.flatnonzero(flags.t1_candidate)[0])
        frac = clustering.sizes()[t1] / clustering.assignments.size
        assert 0.045 <= frac <= 0.075

    @pytest.mark.xfail(strict=True,
                       reason="the flagged cluster holds ~5.7% of excited "
                       "shots, not the full 8.6% decayed fraction; shots that "
                       "decay late stay nearest the excited mean")
    def test_decay_cluster_size_matches_the_decayed_fraction(self, k3):
        clustering, flags = k3
        t1 = int(np.flatnonzero(flags.t1_candidate)[0])
        expect = 0.086 * clustering.assignments.size
        assert abs(clustering.sizes()[t1] - expect) <= 0.2 * expect

    def test_exactly_one_cluster_flagged_and_it_departs_toward_ground(
            self, k3, paper_25600):
        clustering, flags = k3
        assert int(np.sum(flags.t1_candidate)) == 1
        assert not np.any(flags.heating_candidate)
        refs = sim.observed_mean_paths(paper_25600.spec.cavity,
                                       paper_25600.grid,
                                       paper_25600.spec.noise)
        ref0 = refs.alpha0[-33:].mean()
        ref1 = refs.alpha1[-33:].mean()
        for c in range(flags.k):
            late = flags.late_endpoints[c]
            near_ground = abs(late - ref0) < abs(late - ref1)
            assert near_ground == bool(flags.t1_candidate[c])

    @staticmethod
    def _overlaps(k3_clustering, k4_clustering):
        out = []
        for c in range(k3_clustering.k):
            members = k3_clustering.assignments == c
            counts = np.bincount(k4_clustering.assignments[members],
                                 minlength=k4_clustering.k)
            out.append(counts.max() / np.sum(members))
        return np.array(out)

    @pytest.mark.xfail(strict=True,
                       reason="on this synthetic data the extra k=4 center "
                       "recarves the noise-dominated bulk (overlaps ~0.5-0.65) "
                       "while the decay cluster survives intact")
    def test_k4_splits_the_decay_cluster_and_keeps_the_rest(self, k3, k4_25600):
        clustering, flags = k3
        t1 = int(np.flatnonzero(flags.t1_candidate)[0])
        overlaps = self._overlaps(clustering, k4_25600)
        for c in range(3):
            if c == t1:
                assert overlaps[c] < 0.9
            else:
                assert overlaps[c] >= 0.9

    def test_k4_keeps_the_decay_cluster_and_recarves_the_bulk(self, k3,
                                                              k4_25600):
        clustering, flags = k3
        t1 = int(np.flatnonzero(flags.t1_candidate)[0])
        overlaps = self._overlaps(clustering, k4_25600)
        assert overlaps[t1] >= 0.9
        bulk = [c for c in range(3) if c != t1]
        assert np.all(overlaps[bulk] < 0.9)
        # the surviving decay cluster is still the small one
        t1_size = clustering.sizes()[t1]
        closest = np.min(np.abs(k4_25600.sizes() - t1_size))
        assert closest <= 0.15 * t1_size

    def test_injected_pure_decay_mean_is_flagged(self, paper_6400):
        ds = paper_6400
        refs = sim.observed_mean_paths(ds.spec.cavity, ds.grid, ds.spec.noise)
        excited = ds.class_indices(1)
        fake = Clustering(
            k=2,
            assignments=np.arange(excited.size) % 2,
            cluster_means=np.vstack([vectorize_samples(refs.alpha1),
                                     vectorize_samples(refs.alpha0)]),
            objective=0.0, source_class=1)
        flags = identify_special_clusters(fake, subclass_report(fake), refs)
        assert not flags.t1_candidate[0]
        assert flags.t1_candidate[1]

    def test_ground_class_shows_no_heating_cluster_at_k3(self, paper_6400):
        ds = paper_6400
        ground = kmeans(vectorize(ds).subset(ds.class_indices(0)), k=3,
                        init="stabilized", seed=0)
        refs = sim.observed_mean_paths(ds.spec.cavity, ds.grid, ds.spec.noise)
        flags = identify_special_clusters(ground, subclass_report(ground), refs)
        assert not np.any(flags.heating_candidate)
        assert not np.any(flags.t1_candidate)


class TestHeatingSubclass:
    @pytest.fixture(scope="class")
    def heated(self):
        # heating time constant chosen for ~230 expected events among the
        # 12800 ground-prepared shots
        tau = -2.6e-6 / np.log(1.0 - 230.0 / 12800.0)
        spec = sim.default_dataset_spec(n_shots=25600, heating_time=tau)
        return sim.generate_dataset(spec, seed=19)

    def test_k7_isolates_a_heating_cluster_of_expected_size(self, heated):
        ground = kmeans(vectorize(heated).subset(heated.class_indices(0)), k=7,
                        init="stabilized", seed=0)
        refs = sim.observed_mean_paths(heated.spec.cavity, heated.grid,
                                       heated.spec.noise)
        flags = identify_special_clusters(ground, subclass_report(ground), refs)
        assert np.any(flags.heating_candidate)
        flagged_size = int(np.sum(ground.sizes()[flags.heating_candidate]))
        assert abs(flagged_size - 230) <= 0.3 * 230


class TestLift:
    def test_collapse_round_trips_the_binary_labels(self, paper_1600):
        ds = paper_1600
        excited = ds.class_indices(1)
        clustering = kmeans(vectorize(ds).subset(excited), k=3,
                            init="stabilized", seed=0)
        lifted = lift_to_multiclass(ds, clustering, t1_cluster_id=0)
        assert np.array_equal(lifted.collapse(lifted.features.y),
                              ds.labels.astype(int))

    def test_lifted_labels_mark_only_the_chosen_cluster(self, paper_1600):
        ds = paper_1600
        excited = ds.class_indices(1)
        clustering = kmeans(vectorize(ds).subset(excited), k=3,
                            init="stabilized", seed=0)
        lifted = lift_to_multiclass(ds, clustering, t1_cluster_id=1)
        y = lifted.features.y
        assert np.array_equal(np.flatnonzero(y == 2),
                              excited[clustering.assignments == 1])
        assert np.all(y[ds.class_indices(0)] == 0)
        assert lifted.binary_map == {0: 0, 1: 1, 2: 1}

    def test_empty_decay_cluster_is_an_identity_relabeling(self, paper_1600):
        ds = paper_1600
        excited = ds.class_indices(1)
        fake = Clustering(k=3, assignments=np.arange(excited.size) % 2,
                          cluster_means=np.zeros((3, 326)), objective=0.0,
                          source_class=1)
        lifted = lift_to_multiclass(ds, fake, t1_cluster_id=2)
        assert np.array_equal(lifted.features.y, ds.labels.astype(np.uint8))

    def test_lift_validation(self, paper_1600):
        ds = paper_1600
        excited = ds.class_indices(1)
        clustering = kmeans(vectorize(ds).subset(excited), k=3,
                            init="stabilized", seed=0)
        with pytest.raises(InvalidSpecError):
            lift_to_multiclass(ds, clustering, t1_cluster_id=3)
        short = Clustering(k=2, assignments=np.zeros(10, dtype=int),
                           cluster_means=np.zeros((2, 326)), objective=0.0,
                           source_class=1)
        with pytest.raises(InvalidSpecError):
            lift_to_multiclass(ds, short, t1_cluster_id=0)


class TestReplacement:
    def test_no_flags_returns_an_identical_dataset(self, paper_1600):
        out = replace_t1_events(paper_1600, np.array([], dtype=int), seed=5)
        assert np.array_equal(out.samples, paper_1600.samples)
        assert np.array_equal(out.labels, paper_1600.labels)
        assert np.array_equal(out.initial_states, paper_1600.initial_states)
        assert out.jump_records == paper_1600.jump_records
        assert out.metadata == paper_1600.metadata

    def test_only_flagged_rows_change(self, paper_1600):
        excited = paper_1600.class_indices(1)
        flagged = excited[:25]
        out = replace_t1_events(paper_1600, flagged, seed=2)
        untouched = np.setdiff1d(np.arange(paper_1600.n_shots), flagged)
        assert np.array_equal(out.samples[untouched],
                              paper_1600.samples[untouched])
        assert np.array_equal(out.labels, paper_1600.labels)
        pool = np.setdiff1d(excited, flagged)
        pool_rows = {paper_1600.samples[i].tobytes() for i in pool}
        for i in flagged:
            assert out.samples[i].tobytes() in pool_rows
        meta = out.metadata["t1_replacement"]
        assert meta["n_replaced"] == 25
        assert meta["seed"] == 2

    def test_single_survivor_supplies_every_replacement(self, paper_1600):
        excited = paper_1600.class_indices(1)
        survivor = excited[0]
        flagged = excited[1:]
        out = replace_t1_events(paper_1600, flagged, seed=0)
        for i in flagged:
            assert np.array_equal(out.samples[i], paper_1600.samples[survivor])
            assert out.jump_records[i] == paper_1600.jump_records[survivor]
        assert np.array_equal(out.samples[survivor],
                              paper_1600.samples[survivor])

    def test_replacement_is_deterministic(self, paper_1600):
        flagged = paper_1600.class_indices(1)[10:40]
        a = replace_t1_events(paper_1600, flagged, seed=7)
        b = replace_t1_events(paper_1600, flagged, seed=7)
        assert np.array_equal(a.samples, b.samples)

    def test_empty_pool_raises(self, paper_1600):
        with pytest.raises(EmptyPoolError):
            replace_t1_events(paper_1600, paper_1600.class_indices(1), seed=0)

    def test_ground_indices_rejected(self, paper_1600):
        with pytest.raises(InvalidSpecError):
            replace_t1_events(paper_1600, paper_1600.class_indices(0)[:3])


class TestValidation:
    def test_kmeans_rejects_bad_arguments(self):
        X = np.zeros((5, 2))
        with pytest.raises(InvalidSpecError):
            kmeans(X, k=0)
        with pytest.raises(InvalidSpecError):
            kmeans(X, k=6)
        with pytest.raises(InvalidSpecError):
            kmeans(X, k=2, init="random")
        with pytest.raises(InvalidSpecError):
            kmeans(X, k=2, init=np.zeros((3, 2)))
        with pytest.raises(InvalidSpecError):
            kmeans(X, k=2, max_iter=0)

    def test_subclass_report_window_bounds(self):
        c = Clustering(k=1, assignments=np.zeros(4, dtype=int),
                       cluster_means=np.zeros((1, 8)), objective=0.0,
                       source_class=1)
        with pytest.raises(InvalidSpecError):
            subclass_report(c, late_fraction=0.0)
        with pytest.raises(InvalidSpecError):
            subclass_report(c, late_fraction=1.5)

    def test_identify_needs_a_single_class_source(self, paper_1600):
        refs = sim.observed_mean_paths(paper_1600.spec.cavity, paper_1600.grid,
                                       paper_1600.spec.noise)
        mixed = Clustering(k=1, assignments=np.zeros(4, dtype=int),
                           cluster_means=np.zeros((1, 326)), objective=0.0,
                           source_class=None)
        with pytest.raises(InvalidSpecError):
            identify_special_clusters(mixed, subclass_report(mixed), refs)
