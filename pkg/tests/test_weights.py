import numpy as np
import pytest

from uomkit.config import SoftmaxConfig
from uomkit.data import standardize
from uomkit.errors import ArgumentError, ModelLoadError
from uomkit.experiments import softmax_gradient_error
from uomkit.weights import (
    SoftmaxClassifier,
    id_weights,
    load_classifier,
    per_class_accuracy,
    save_classifier,
    train_softmax_weighted,
    weighted_cross_entropy,
    write_weights_csv,
)


def test_id_weights_hand_example():
    """Estimates 3 and 5 give weights 0.75 and 1.25."""
    w = id_weights([3.0, 5.0])
    np.testing.assert_allclose(w.omega, [0.75, 1.25])
    assert w.omega.sum() == pytest.approx(w.L)


@pytest.mark.parametrize("bad", [[], [1.0, 0.0], [2.0, -1.0], [1.0, float("nan")]])
def test_id_weights_rejects_bad_estimates(bad):
    with pytest.raises(ArgumentError):
        id_weights(bad)


def test_unit_weights_match_standard_training():
    """Equal estimates reproduce the unweighted classifier exactly."""
    rng = np.random.default_rng(50)
    X = rng.standard_normal((90, 3))
    y = rng.integers(0, 3, 90)
    cfg = SoftmaxConfig(epochs=5, seed=2)
    standard = train_softmax_weighted(X, y, None, cfg, n_classes=3)
    weighted = train_softmax_weighted(X, y, id_weights([4.0, 4.0, 4.0]), cfg)
    np.testing.assert_array_equal(standard.W, weighted.W)
    np.testing.assert_array_equal(standard.b, weighted.b)


def test_weighted_cross_entropy_scales_per_class():
    """Doubling one class's weight doubles its share of the loss."""
    W, b = np.zeros((2, 2)), np.zeros(2)
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    y = np.array([0, 1])
    plain, _ = weighted_cross_entropy(W, b, X, y)
    skewed, _ = weighted_cross_entropy(W, b, X, y, np.array([2.0, 0.0]))
    assert plain == pytest.approx(np.log(2.0))
    assert skewed == pytest.approx(np.log(2.0))


def test_gradients_match_central_differences():
    assert softmax_gradient_error(seed=0) <= 1e-6


def test_separable_classes_are_learned(two_blobs):
    Z, _, _ = standardize(two_blobs)
    clf = train_softmax_weighted(Z.values, two_blobs.labels, cfg=SoftmaxConfig(epochs=30))
    np.testing.assert_array_equal(per_class_accuracy(clf, Z.values, two_blobs.labels), [1.0, 1.0])
    assert clf.losses[-1] < clf.losses[0]


def test_per_class_accuracy_marks_absent_classes():
    clf = SoftmaxClassifier(W=np.array([[1.0, -1.0, 0.0]]), b=np.zeros(3))
    acc = per_class_accuracy(clf, np.array([[1.0], [-1.0], [2.0]]), [0, 1, 1])
    assert acc[0] == 1.0
    assert acc[1] == 0.5
    assert np.isnan(acc[2])


def test_labels_out_of_range():
    with pytest.raises(ArgumentError, match="labels must lie"):
        train_softmax_weighted(np.zeros((2, 1)), [0, 3], id_weights([1.0, 2.0]))


def test_classifier_save_load(tmp_path):
    rng = np.random.default_rng(51)
    clf = SoftmaxClassifier(W=rng.standard_normal((4, 3)), b=rng.standard_normal(3), losses=[1.0, 0.5])
    path = str(tmp_path / "clf.params")
    save_classifier(clf, path)
    back = load_classifier(path)
    np.testing.assert_array_equal(back.W, clf.W)
    np.testing.assert_array_equal(back.b, clf.b)
    assert back.losses == [1.0, 0.5]
    with pytest.raises(ModelLoadError):
        load_classifier(str(tmp_path / "absent.params"))


def test_write_weights_csv(tmp_path):
    path = tmp_path / "weights.csv"
    write_weights_csv(id_weights([3.0, 5.0]), str(path))
    assert path.read_text().splitlines() == ["class,d_hat,omega", "0,3.0,0.75", "1,5.0,1.25"]
