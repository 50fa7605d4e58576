import numpy as np
import pytest

from readoutml import sim


# Session-scoped synthetic datasets.  Generation dominates suite runtime, so
# every test that can share a dataset does; seeds are arbitrary but frozen.


@pytest.fixture(scope="session")
def paper_1600():
    return sim.generate_dataset(sim.default_dataset_spec(n_shots=1600), seed=11)


@pytest.fixture(scope="session")
def paper_6400():
    return sim.generate_dataset(sim.default_dataset_spec(n_shots=6400), seed=7)


@pytest.fixture(scope="session")
def paper_25600():
    return sim.generate_dataset(sim.default_dataset_spec(n_shots=25600), seed=1)


@pytest.fixture(scope="session")
def ideal_white_3200():
    """No jumps, no prep error, white noise."""
    return sim.generate_dataset(sim.ideal_dataset_spec(n_shots=3200), seed=13)


@pytest.fixture(scope="session")
def ideal_white_6400():
    return sim.generate_dataset(sim.ideal_dataset_spec(n_shots=6400), seed=5)


@pytest.fixture(scope="session")
def ideal_white_25600():
    return sim.generate_dataset(sim.ideal_dataset_spec(n_shots=25600), seed=3)


@pytest.fixture(scope="session")
def excited_clustering_25600(paper_25600):
    """k=3 clustering of the excited class with decay flags, shared by the
    cluster tests and the acceptance suite."""
    from readoutml import cluster, features

    fm = features.vectorize(paper_25600)
    excited = cluster.kmeans(fm.subset(paper_25600.class_indices(1)), k=3,
                             init="stabilized", seed=0)
    report = cluster.subclass_report(excited)
    refs = sim.observed_mean_paths(paper_25600.spec.cavity, paper_25600.grid,
                                   paper_25600.spec.noise)
    flags = cluster.identify_special_clusters(excited, report, refs)
    return excited, flags
