import json

import numpy as np
import pytest

from uomkit.data import DataMatrix
from uomkit.errors import ArgumentError
from uomkit.idest import mle_id
from uomkit.knn import knn_distances, nn_distance_to_set
from uomkit.synth import compose_union, gen_affine_manifold, gen_pushforward_manifold


def _rank(values: np.ndarray) -> int:
    return int(np.linalg.matrix_rank(values - values.mean(axis=0), tol=1e-8))


def test_affine_manifold_spans_d_dimensions():
    X, truth = gen_affine_manifold(200, 3, 10, seed=0)
    assert (X.n, X.D) == (200, 10)
    assert _rank(X.values) == 3
    assert truth.components[0].dim == 3
    assert truth.components[0].kind == "affine"


def test_affine_noise_fills_ambient_space():
    X, _ = gen_affine_manifold(200, 3, 10, seed=0, noise_sigma=0.01)
    assert _rank(X.values) == 10


def test_affine_is_deterministic():
    a, _ = gen_affine_manifold(50, 2, 5, seed=4)
    b, _ = gen_affine_manifold(50, 2, 5, seed=4)
    c, _ = gen_affine_manifold(50, 2, 5, seed=5)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


@pytest.mark.parametrize("d, D", [(0, 4), (5, 4)])
def test_affine_rejects_bad_dimensions(d, D):
    with pytest.raises(ArgumentError):
        gen_affine_manifold(10, d, D, seed=0)


def test_pushforward_without_live_latents_is_a_point():
    """m=0 sends every latent to the same output."""
    X, truth = gen_pushforward_manifold(20, 6, 0, 12, seed=1)
    assert np.all(X.values == X.values[0])
    assert truth.components[0].dim == 0


def test_pushforward_records_settings():
    X, truth = gen_pushforward_manifold(30, 6, 2, 12, seed=1, widths=[8])
    assert X.D == 12
    assert truth.components[0].params == {"d_latent": 6, "widths": [8]}


def test_pushforward_dimension_is_recovered():
    """The estimator sees roughly m dimensions on a curved pushforward."""
    X, _ = gen_pushforward_manifold(3000, 8, 3, 16, seed=2)
    estimate = mle_id(knn_distances(X, 10), 10)
    assert 2.0 <= estimate.value <= 4.0


def test_pushforward_rejects_m_above_latent():
    with pytest.raises(ArgumentError):
        gen_pushforward_manifold(10, 4, 5, 8, seed=0)


def test_compose_union_respects_gap(tmp_path):
    """Components end up at least ``gap`` apart and carry their labels."""
    parts = [gen_affine_manifold(100, d, 16, seed=s) for s, d in enumerate((1, 2, 4))]
    union, truth = compose_union(parts, gap=10.0, seed=3)
    assert union.n == 300
    np.testing.assert_array_equal(np.bincount(union.labels), [100, 100, 100])
    for label in range(3):
        inside = DataMatrix(union.values[union.labels == label])
        outside = DataMatrix(union.values[union.labels != label])
        assert nn_distance_to_set(inside, outside).min() >= 10.0
    assert truth.min_distance >= 10.0
    assert [c.dim for c in truth.components] == [1, 2, 4]

    path = tmp_path / "truth.json"
    truth.save(str(path))
    saved = json.loads(path.read_text())
    assert saved["gap"] == 10.0
    assert [c["dim"] for c in saved["components"]] == [1, 2, 4]


def test_compose_single_component_keeps_points():
    part = gen_affine_manifold(40, 2, 6, seed=0)
    X = part[0]
    union, truth = compose_union([part], gap=10.0)
    np.testing.assert_array_equal(union.values, X.values)
    np.testing.assert_array_equal(union.labels, np.zeros(40))
    assert truth.min_distance is None


def test_compose_rejects_mixed_ambient_dimensions():
    with pytest.raises(ArgumentError, match="ambient"):
        compose_union([gen_affine_manifold(10, 1, 4, seed=0), gen_affine_manifold(10, 1, 5, seed=1)], gap=1.0)
