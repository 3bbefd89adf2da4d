import math

import numpy as np
import pytest

from uomkit.data import DataMatrix
from uomkit.errors import ArgumentError, UndefinedCorrelationError
from uomkit.evaluation import (
    auto_tau,
    bridge_mass,
    id_accuracy_report,
    median_bandwidth,
    mmd2_unbiased,
    multinomial_chi2,
    pearson_r_and_pvalue,
    write_plot_tsv,
)
from uomkit.experiments import many_class_trend


def test_mmd_hand_example():
    """{0, 2} against {1, 1} at bandwidth 1."""
    result = mmd2_unbiased(np.array([0.0, 2.0]), np.array([1.0, 1.0]), bandwidth=1.0)
    expected = math.exp(-2.0) + 1.0 - 2.0 * math.exp(-0.5)
    assert result.value == pytest.approx(expected, abs=1e-12)
    assert result.value == pytest.approx(-0.077726, abs=1e-6)
    assert (result.m, result.n) == (2, 2)


def test_mmd_is_symmetric():
    rng = np.random.default_rng(40)
    X, Y = rng.standard_normal((60, 3)), rng.standard_normal((45, 3)) + 0.5
    a = mmd2_unbiased(X, Y)
    b = mmd2_unbiased(Y, X)
    assert a.bandwidth == b.bandwidth
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_mmd_separates_shifted_samples():
    rng = np.random.default_rng(41)
    X = rng.standard_normal((300, 2))
    same = mmd2_unbiased(X, rng.standard_normal((300, 2)))
    shifted = mmd2_unbiased(X, rng.standard_normal((300, 2)) + 3.0)
    assert abs(same.value) < 0.02
    assert shifted.value > 0.3


def test_mmd_chunking_does_not_change_the_value():
    """Inputs longer than one kernel block agree with a direct computation."""
    rng = np.random.default_rng(42)
    X, Y = rng.standard_normal((1500, 2)), rng.standard_normal((40, 2))
    kxx = np.exp(-((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2) / 2.0)
    kyy = np.exp(-((Y[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2) / 2.0)
    kxy = np.exp(-((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2) / 2.0)
    m, n = X.shape[0], Y.shape[0]
    expected = (kxx.sum() - m) / (m * (m - 1)) + (kyy.sum() - n) / (n * (n - 1)) - 2.0 * kxy.mean()
    assert mmd2_unbiased(X, Y, bandwidth=1.0).value == pytest.approx(expected, abs=1e-10)


def test_mmd_argument_checks():
    with pytest.raises(ArgumentError, match="at least two"):
        mmd2_unbiased(np.zeros((1, 2)), np.zeros((3, 2)))
    with pytest.raises(ArgumentError, match="dimension mismatch"):
        mmd2_unbiased(np.zeros((3, 2)), np.zeros((3, 1)))
    with pytest.raises(ArgumentError, match="positive"):
        mmd2_unbiased(np.zeros((3, 1)), np.ones((3, 1)), bandwidth=0.0)


def test_median_bandwidth_of_identical_points_falls_back():
    assert median_bandwidth(np.zeros((3, 2)), np.zeros((2, 2))) == 1.0


def test_bridge_mass_counts_far_samples():
    train = DataMatrix(np.array([[0.0], [10.0]]))
    samples = DataMatrix(np.array([[0.1], [5.0], [9.9]]))
    report = bridge_mass(samples, train, tau=1.0)
    assert report.off_support_fraction == pytest.approx(1 / 3)
    np.testing.assert_allclose(report.distances, [0.1, 5.0, 0.1])
    assert report.to_dict()["max_distance"] == 5.0


def test_auto_tau_scales_training_spacing():
    train = DataMatrix(np.arange(20, dtype=np.float64).reshape(-1, 1))
    assert auto_tau(train) == pytest.approx(3.0)


def test_auto_tau_tolerates_duplicates():
    train = DataMatrix(np.array([[0.0], [0.0], [1.0]]))
    assert auto_tau(train) >= 0.0


def test_pearson_hand_example():
    """[1, 2, 3] against [1, 3, 2] gives r = 0.5 and p = 2/3."""
    r, p = pearson_r_and_pvalue([1, 2, 3], [1, 3, 2])
    assert r == pytest.approx(0.5, abs=1e-12)
    assert p == pytest.approx(2 / 3, abs=1e-9)


def test_pearson_matches_scipy():
    from scipy import stats

    rng = np.random.default_rng(43)
    x, y = rng.standard_normal(12), rng.standard_normal(12)
    r, p = pearson_r_and_pvalue(x, y)
    expected = stats.pearsonr(x, y)
    assert r == pytest.approx(expected[0], abs=1e-12)
    assert p == pytest.approx(expected[1], abs=1e-9)


def test_perfect_correlation_has_zero_p_value():
    assert pearson_r_and_pvalue([1, 2, 3, 4], [2, 4, 6, 8]) == (1.0, 0.0)


def test_constant_vector_is_undefined():
    with pytest.raises(UndefinedCorrelationError):
        pearson_r_and_pvalue([1, 1, 1], [1, 2, 3])
    with pytest.raises(ArgumentError, match="at least 3"):
        pearson_r_and_pvalue([1, 2], [1, 2])


def test_id_accuracy_report_fits_a_line():
    report = id_accuracy_report([2.0, 4.0, 6.0], [0.9, 0.7, 0.5])
    assert report["r"] == pytest.approx(-1.0)
    assert report["slope"] == pytest.approx(-0.1)
    assert report["intercept"] == pytest.approx(1.1)
    assert [pt["fit"] for pt in report["points"]] == pytest.approx([0.9, 0.7, 0.5])


def test_many_class_downward_trend_is_significant():
    """Accuracy falling with the estimate over 100 classes gives r < 0 and p < 0.05."""
    d_hats, accuracies = many_class_trend(seed=0)
    report = id_accuracy_report(d_hats, accuracies)
    assert report["n"] == 100
    assert report["r"] < 0.0
    assert report["p"] < 0.05
    assert report["slope"] < 0.0


def test_write_plot_tsv(tmp_path):
    path = tmp_path / "plot.tsv"
    write_plot_tsv(str(path), [1, 2], [0.5, 0.25])
    assert path.read_text().splitlines() == ["x\ty\tfit", "1.0\t0.5\t", "2.0\t0.25\t"]


def test_chi2_accepts_exact_counts():
    result = multinomial_chi2([50, 30, 20], [0.5, 0.3, 0.2])
    assert result.statistic == pytest.approx(0.0, abs=1e-12)
    assert result.passed


def test_chi2_rejects_skewed_counts():
    result = multinomial_chi2([1000, 0], [0.5, 0.5])
    assert not result.passed
    assert result.p_value < 1e-6
