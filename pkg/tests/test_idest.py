import csv

import numpy as np
import pytest

from uomkit.config import VARIANT_K_MINUS_1, VARIANT_K_MINUS_2
from uomkit.data import DataMatrix, GroupIndex
from uomkit.errors import ArgumentError, EstimatorUndefinedError
from uomkit.idest import INSUFFICIENT, estimate_over_k, latent_dim_from_estimate, mle_id, per_group_id
from uomkit.knn import NeighborTable, knn_distances
from uomkit.synth import compose_union, gen_affine_manifold


def test_hand_example(line_points):
    """{0, 1, e} at k=2 telescopes to a log-ratio sum of 2, giving 1.5."""
    estimate = mle_id(knn_distances(line_points, 2), 2)
    assert estimate.value == pytest.approx(1.5, rel=1e-12)
    assert estimate.n_used == 3
    assert estimate.variant == VARIANT_K_MINUS_1


def test_variant_identity():
    """The k-2 estimate is the k-1 estimate times (k-2)/(k-1)."""
    rng = np.random.default_rng(4)
    distances = np.sort(rng.uniform(0.1, 2.0, (30, 5)), axis=1)
    table = NeighborTable(distances=distances, indices=np.zeros((30, 5), dtype=np.int64), kept_rows=np.arange(30))
    e1 = mle_id(table, 5, VARIANT_K_MINUS_1)
    e2 = mle_id(table, 5, VARIANT_K_MINUS_2)
    assert abs(e2.value - e1.value * 3 / 4) / e2.value <= 1e-12


def test_scale_invariance():
    """Scaling every coordinate leaves the estimate unchanged."""
    rng = np.random.default_rng(5)
    values = rng.standard_normal((200, 3))
    a = mle_id(knn_distances(DataMatrix(values), 10), 10).value
    b = mle_id(knn_distances(DataMatrix(values * 8.0), 10), 10).value
    assert a == pytest.approx(b, rel=1e-12)


def test_zero_distance_is_undefined():
    """A zero neighbor distance makes the estimate undefined."""
    table = NeighborTable(
        distances=np.array([[0.0, 1.0], [1.0, 2.0]]), indices=np.zeros((2, 2), dtype=np.int64), kept_rows=np.arange(2)
    )
    with pytest.raises(EstimatorUndefinedError, match="row 0"):
        mle_id(table, 2)


def test_equal_distances_are_undefined():
    """All-equal distances give a zero log-ratio sum."""
    table = NeighborTable(
        distances=np.ones((4, 3)), indices=np.zeros((4, 3), dtype=np.int64), kept_rows=np.arange(4)
    )
    with pytest.raises(EstimatorUndefinedError):
        mle_id(table, 3)


def test_k_checks(line_points):
    """k must fit the table and the variant's minimum."""
    table = knn_distances(line_points, 2)
    with pytest.raises(ArgumentError, match="exceeds"):
        mle_id(table, 3)
    with pytest.raises(ArgumentError, match="requires k >= 3"):
        mle_id(table, 2, VARIANT_K_MINUS_2)
    with pytest.raises(ArgumentError, match="unknown variant"):
        mle_id(table, 2, "k")


@pytest.mark.parametrize("value, expected", [(21.3, 22), (3.0, 3), (0.2, 1)])
def test_latent_dim_from_estimate(value, expected):
    assert latent_dim_from_estimate(value) == expected


def test_estimate_over_k_slices_one_search():
    """Estimates from one wide search equal separate searches."""
    rng = np.random.default_rng(6)
    X = DataMatrix(rng.standard_normal((120, 4)))
    estimates, removed = estimate_over_k(X, [3, 10])
    assert removed == 0
    for k in (3, 10):
        assert estimates[k].value == mle_id(knn_distances(X, k), k).value


def test_single_group_equals_pooled():
    """With one group the grid equals the estimate of the whole dataset."""
    rng = np.random.default_rng(8)
    X = DataMatrix(rng.standard_normal((80, 3)))
    report = per_group_id(X, None, [5, 10])
    for k in (5, 10):
        assert report.estimate(0, k).value == report.pooled[k].value == mle_id(knn_distances(X, k), k).value


def test_small_group_is_insufficient(tmp_path):
    """Groups too small for some k are flagged, not fatal."""
    rng = np.random.default_rng(9)
    X = DataMatrix(rng.standard_normal((40, 3)))
    g = GroupIndex.from_assignment([0] * 35 + [1] * 5)
    report = per_group_id(X, g, [3, 10])
    assert report.estimate(1, 3) is not None
    assert report.estimate(1, 10) is None
    assert report.to_dict()["groups"][1]["estimates"][1]["status"] == INSUFFICIENT

    path = tmp_path / "report.csv"
    report.to_csv(str(path))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["group", "k", "variant", "estimate", "n_used"]
    assert ["1", "10", VARIANT_K_MINUS_1, INSUFFICIENT, "5"] in rows
    assert sum(1 for r in rows if r[0] == "pooled") == 2


def test_union_groups_bracket_pooled():
    """Groups of dims 2 and 8 differ by at least 3 and bracket the pooled estimate."""
    low = gen_affine_manifold(2000, 2, 64, seed=1)
    high = gen_affine_manifold(2000, 8, 64, seed=2)
    union, _ = compose_union([low, high], gap=10.0, seed=0)
    report = per_group_id(union, GroupIndex.from_labels(union.labels), [10, 20])
    for k in (10, 20):
        d_low, d_high = report.values_for_k(k)
        assert d_high - d_low >= 3.0
        assert d_low < report.pooled[k].value < d_high


@pytest.mark.slow
def test_five_dimensional_cube():
    """A 5-cube in R^64 (n=10000, k=20) is estimated within 15%."""
    X, _ = gen_affine_manifold(10000, 5, 64, seed=3)
    estimate = mle_id(knn_distances(X, 20), 20)
    assert 4.25 <= estimate.value <= 5.75


def test_pooled_insufficient_row_reports_point_count(tmp_path):
    """An insufficient pooled cell carries the pooled point count, like the group rows."""
    X = DataMatrix(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0], [1.0, 1.0], [1.0, 1.0]]))
    report = per_group_id(X, None, [2, 10])
    assert report.pooled[10] is None
    assert report.pooled_used == 5

    path = tmp_path / "report.csv"
    report.to_csv(str(path))
    rows = list(csv.reader(path.open()))
    assert ["pooled", "10", VARIANT_K_MINUS_1, INSUFFICIENT, "5"] in rows
    assert ["0", "10", VARIANT_K_MINUS_1, INSUFFICIENT, "5"] in rows
