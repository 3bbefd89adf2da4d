import logging
import math

import numpy as np
import pytest

from uomkit.data import DataMatrix
from uomkit.errors import ArgumentError, DuplicatePointError
from uomkit.knn import VPTree, dump_neighbor_table, knn_distances, nn_distance_to_set, pairwise_distances


def test_hand_geometry(line_points):
    """Distances of {0, 1, e} at k=2."""
    table = knn_distances(line_points, 2)
    e = math.e
    np.testing.assert_allclose(table.distances, [[1, e], [1, e - 1], [e - 1, e]], rtol=1e-15)
    np.testing.assert_array_equal(table.indices, [[1, 2], [0, 2], [1, 0]])
    assert table.removed == 0


def test_ties_break_by_row_index():
    """Equidistant neighbors come out in ascending row order."""
    X = DataMatrix(np.array([[0.0], [3.0], [-3.0], [10.0]]))
    table = knn_distances(X, 2)
    np.testing.assert_array_equal(table.indices[0], [1, 2])
    vp = knn_distances(X, 2, backend="vptree")
    np.testing.assert_array_equal(vp.indices, table.indices)


def test_rows_are_sorted():
    """Every row of distances is non-decreasing."""
    rng = np.random.default_rng(2)
    table = knn_distances(DataMatrix(rng.standard_normal((100, 3))), 10)
    assert np.all(np.diff(table.distances, axis=1) >= 0)


def test_brute_force_equals_vptree():
    """Both backends return identical tables on random data."""
    rng = np.random.default_rng(11)
    X = DataMatrix(rng.standard_normal((200, 8)))
    brute = knn_distances(X, 10)
    tree = knn_distances(X, 10, backend="vptree")
    np.testing.assert_array_equal(brute.distances, tree.distances)
    np.testing.assert_array_equal(brute.indices, tree.indices)


def test_thread_count_does_not_change_results():
    """Parallel searches match the sequential ones exactly."""
    rng = np.random.default_rng(12)
    X = DataMatrix(rng.standard_normal((150, 4)))
    one = knn_distances(X, 5, threads=1)
    four = knn_distances(X, 5, threads=4)
    tree = knn_distances(X, 5, backend="vptree", threads=4)
    np.testing.assert_array_equal(one.distances, four.distances)
    np.testing.assert_array_equal(one.indices, tree.indices)


def test_vptree_small_leaf_size():
    """A tree with single-point leaves still answers exactly."""
    rng = np.random.default_rng(13)
    values = rng.standard_normal((60, 2))
    tree = VPTree(values, leaf_size=1)
    rows, dists = tree.query(0, 4)
    expected = pairwise_distances(values[:1], values)[0]
    expected[0] = np.inf
    np.testing.assert_array_equal(rows, np.argsort(expected, kind="stable")[:4])
    np.testing.assert_array_equal(dists, np.sort(expected)[:4])


def test_vptree_on_identical_rows():
    """Thousands of coinciding rows build a shallow tree; ties resolve by row id."""
    values = np.ones((3000, 3))
    tree = VPTree(values, leaf_size=1)

    def depth(node) -> int:
        if node is None:
            return 0
        return 1 + max(depth(node.inside), depth(node.outside))

    assert depth(tree.root) <= 16
    rows, dists = tree.query(5, 3)
    np.testing.assert_array_equal(rows, [0, 1, 2])
    np.testing.assert_array_equal(dists, [0.0, 0.0, 0.0])


def test_duplicates_raise_without_dedup():
    """Coinciding rows are named in the error."""
    X = DataMatrix(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [5.0, 2.0]]))
    with pytest.raises(DuplicatePointError, match="rows 0 and 2"):
        knn_distances(X, 1)


def test_dedup_removes_duplicates(caplog):
    """Dedup drops the later copy and reports the count."""
    X = DataMatrix(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [5.0, 2.0]]))
    with caplog.at_level(logging.WARNING, logger="uomkit"):
        table = knn_distances(X, 2, dedup=True)
    assert table.n == 3
    assert table.removed == 1
    np.testing.assert_array_equal(table.kept_rows, [0, 1, 3])
    assert "1 duplicate removed" in caplog.text


def test_k_out_of_range():
    """k must lie in [1, n)."""
    X = DataMatrix(np.array([[0.0], [1.0], [2.0]]))
    with pytest.raises(ArgumentError):
        knn_distances(X, 3)
    with pytest.raises(ArgumentError):
        knn_distances(X, 0)
    with pytest.raises(ArgumentError, match="unknown backend"):
        knn_distances(X, 1, backend="kd")


def test_nn_distance_to_set():
    """Distances to a separate reference set (self not excluded)."""
    Q = DataMatrix(np.array([[0.0, 0.0], [3.0, 4.0]]))
    R = DataMatrix(np.array([[3.0, 4.0]]))
    np.testing.assert_array_equal(nn_distance_to_set(Q, R), [5.0, 0.0])


def test_nn_distance_to_set_matches_scan():
    """Chunked search equals a direct scan."""
    rng = np.random.default_rng(14)
    Q, R = rng.standard_normal((50, 3)), rng.standard_normal((70, 3))
    expected = np.sqrt(((Q[:, None, :] - R[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    got = nn_distance_to_set(DataMatrix(Q), DataMatrix(R), threads=3)
    np.testing.assert_allclose(got, expected, rtol=1e-12)


def test_dump_neighbor_table(tmp_path, line_points):
    """The debug table lists one line per (point, rank)."""
    path = tmp_path / "nn.csv"
    dump_neighbor_table(knn_distances(line_points, 2), str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "i,j,index,distance"
    assert len(lines) == 1 + 3 * 2
    assert lines[1].startswith("0,1,1,")
