import numpy as np
import pytest

from uomkit.cluster import (
    WardLinkage,
    assignment_from_merges,
    kmeans_fit,
    kmeanspp,
    label_agreement,
    save_dendrogram,
    ward_agglomerative,
)
from uomkit.data import DataMatrix
from uomkit.errors import ArgumentError
from uomkit.experiments import naive_ward_merges


def test_ward_hand_example():
    """{0, 1, 10} at L=2 merges 0 and 1 first with cost 0.5."""
    X = DataMatrix(np.array([[0.0], [1.0], [10.0]]))
    g, merges = ward_agglomerative(X, 2)
    np.testing.assert_array_equal(g.assignment, [0, 0, 1])
    assert len(merges) == 1
    assert (merges[0].left_id, merges[0].right_id, merges[0].new_id) == (0, 1, 3)
    assert merges[0].cost == pytest.approx(0.5)


def test_ward_L_equals_n():
    """Every point is its own cluster and nothing is merged."""
    X = DataMatrix(np.array([[0.0], [4.0], [1.0]]))
    g, merges = ward_agglomerative(X, 3)
    assert merges == []
    np.testing.assert_array_equal(g.assignment, [0, 1, 2])


def test_ward_rejects_bad_L():
    X = DataMatrix(np.zeros((3, 1)) + np.arange(3)[:, None])
    with pytest.raises(ArgumentError):
        ward_agglomerative(X, 0)
    with pytest.raises(ArgumentError):
        ward_agglomerative(X, 4)


def test_ward_matches_naive_recomputation():
    """The Lance-Williams merge sequence equals recomputation from raw points."""
    rng = np.random.default_rng(21)
    for _ in range(15):
        n = int(rng.integers(5, 40))
        L = int(rng.integers(1, n))
        values = rng.standard_normal((n, 2))
        _, merges = ward_agglomerative(DataMatrix(values), L)
        naive = naive_ward_merges(values, L)
        assert [(m.left_id, m.right_id) for m in merges] == [(a, b) for a, b, _ in naive]
        np.testing.assert_allclose([m.cost for m in merges], [c for _, _, c in naive], rtol=1e-9, atol=1e-12)


def test_ward_ties_pick_smallest_ids():
    """Equal costs merge the lexicographically smallest pair of ids."""
    X = DataMatrix(np.array([[0.0], [1.0], [5.0], [6.0]]))
    state = WardLinkage.from_points(X.as_float64())
    first = state.merge_step()
    second = state.merge_step()
    assert (first.left_id, first.right_id) == (0, 1)
    assert (second.left_id, second.right_id) == (2, 3)


def test_greedy_costs_are_minimal():
    """Every chosen cost is at most every other active pair's cost."""
    rng = np.random.default_rng(22)
    values = rng.standard_normal((12, 2))
    members = {i: [i] for i in range(12)}
    _, merges = ward_agglomerative(DataMatrix(values), 1)
    for m in merges:
        ids = sorted(members)
        costs = []
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                mu = values[members[a]].mean(axis=0) - values[members[b]].mean(axis=0)
                na, nb = len(members[a]), len(members[b])
                costs.append(na * nb / (na + nb) * float(mu @ mu))
        assert m.cost <= min(costs) * (1 + 1e-9) + 1e-12
        members[m.new_id] = members.pop(m.left_id) + members.pop(m.right_id)


def test_assignment_from_merges_coarsens(two_blobs):
    """Replaying a finer run's log gives the coarser partition."""
    fine, merges = ward_agglomerative(two_blobs, 1)
    coarse, _ = ward_agglomerative(two_blobs, 2)
    replay = assignment_from_merges(two_blobs.n, merges, 2)
    np.testing.assert_array_equal(replay.assignment, coarse.assignment)
    assert fine.L == 1


def test_ward_recovers_separated_blobs(two_blobs):
    g, _ = ward_agglomerative(two_blobs, 2)
    assert label_agreement(g.assignment, two_blobs.labels) == 1.0


def test_save_dendrogram(tmp_path):
    X = DataMatrix(np.array([[0.0], [1.0], [10.0]]))
    _, merges = ward_agglomerative(X, 1)
    path = tmp_path / "dendrogram.csv"
    save_dendrogram(merges, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "step,left_id,right_id,cost,new_size"
    assert lines[1] == "1,0,1,0.5,2"
    assert lines[2].startswith("2,2,3,")


def test_kmeans_single_cluster_centroid_is_mean():
    rng = np.random.default_rng(23)
    values = rng.standard_normal((30, 3))
    assignment, centroids, _ = kmeans_fit(values, 1, seed=0)
    assert np.all(assignment == 0)
    np.testing.assert_allclose(centroids[0], values.mean(axis=0))


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_kmeans_separates_far_blobs(two_blobs, seed):
    """Blobs a hundred diameters apart are separated under any seed."""
    g = kmeanspp(two_blobs, 2, seed)
    assert label_agreement(g.assignment, two_blobs.labels) == 1.0


def test_kmeans_is_deterministic():
    rng = np.random.default_rng(24)
    X = DataMatrix(rng.standard_normal((300, 2)))
    a = kmeanspp(X, 4, seed=9, threads=1)
    b = kmeanspp(X, 4, seed=9, threads=4)
    np.testing.assert_array_equal(a.assignment, b.assignment)
    assert sorted(a.sizes.tolist()) == sorted(np.bincount(a.assignment).tolist())
