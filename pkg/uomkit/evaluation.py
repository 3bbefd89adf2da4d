"""Sample-quality and statistical evaluation.

* :func:`mmd2_unbiased` -- unbiased kernel MMD^2 with an RBF kernel.
* :func:`bridge_mass` -- fraction of generated samples farther than a
  threshold from every training point, i.e. mass placed between the
  components of a disconnected support.
* :func:`pearson_r_and_pvalue` / :func:`id_accuracy_report` -- the
  correlation between per-class dimension estimates and accuracies.
* :func:`multinomial_chi2` -- goodness of fit of cluster counts.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.spatial.distance import cdist, pdist

from .data import DataMatrix
from .errors import ArgumentError, UndefinedCorrelationError
from .knn import knn_distances, nn_distance_to_set

logger = logging.getLogger(__name__)

Points = Union[DataMatrix, np.ndarray]

MEDIAN = "median"

# Rows kept from each set when estimating the median pairwise distance.
MEDIAN_SUBSAMPLE = 2000

_KERNEL_CHUNK = 1024


def _as_array(points: Points) -> np.ndarray:
    if isinstance(points, DataMatrix):
        return points.as_float64()
    values = np.asarray(points, dtype=np.float64)
    return values.reshape(-1, 1) if values.ndim == 1 else values


@dataclass
class MmdResult:
    """Unbiased MMD^2 estimate together with the bandwidth and sample counts."""

    value: float
    bandwidth: float
    m: int
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "bandwidth": self.bandwidth, "m": self.m, "n": self.n}


def _evenly_spaced(values: np.ndarray, cap: int) -> np.ndarray:
    if values.shape[0] <= cap:
        return values
    rows = np.round(np.linspace(0, values.shape[0] - 1, cap)).astype(np.int64)
    return values[rows]


def median_bandwidth(X: np.ndarray, Y: np.ndarray) -> float:
    """Median pairwise distance over the pooled sets.

    Each set is reduced to at most ``MEDIAN_SUBSAMPLE`` evenly spaced
    rows first, so the value is symmetric in ``X`` and ``Y``.
    """
    pooled = np.concatenate([_evenly_spaced(X, MEDIAN_SUBSAMPLE), _evenly_spaced(Y, MEDIAN_SUBSAMPLE)])
    sigma = float(np.median(pdist(pooled)))
    if sigma <= 0.0:
        logger.warning("median pairwise distance is zero; using bandwidth 1")
        sigma = 1.0
    return sigma


def _kernel_sum(A: np.ndarray, B: np.ndarray, sigma: float, skip_diagonal: bool) -> float:
    total = 0.0
    scale = -1.0 / (2.0 * sigma * sigma)
    for start in range(0, A.shape[0], _KERNEL_CHUNK):
        block = np.exp(cdist(A[start : start + _KERNEL_CHUNK], B, "sqeuclidean") * scale)
        if skip_diagonal:
            rows = np.arange(block.shape[0])
            block[rows, rows + start] = 0.0
        total += float(block.sum())
    return total


def mmd2_unbiased(Xs: Points, Ys: Points, bandwidth: Union[float, str, None] = MEDIAN) -> MmdResult:
    """Unbiased MMD^2 between two samples under ``k(a, b) = exp(-|a-b|^2 / (2 s^2))``.

    ``bandwidth`` is either ``s`` itself or ``"median"`` (median pairwise
    distance of the pooled samples).
    """
    X, Y = _as_array(Xs), _as_array(Ys)
    m, n = X.shape[0], Y.shape[0]
    if m < 2 or n < 2:
        raise ArgumentError(f"both samples need at least two points, got {m} and {n}")
    if X.shape[1] != Y.shape[1]:
        raise ArgumentError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if bandwidth is None or bandwidth == MEDIAN:
        sigma = median_bandwidth(X, Y)
    else:
        sigma = float(bandwidth)
        if not sigma > 0:
            raise ArgumentError(f"bandwidth must be positive, got {bandwidth}")
    xx = _kernel_sum(X, X, sigma, True) / (m * (m - 1))
    yy = _kernel_sum(Y, Y, sigma, True) / (n * (n - 1))
    xy = _kernel_sum(X, Y, sigma, False) / (m * n)
    return MmdResult(value=xx + yy - 2.0 * xy, bandwidth=sigma, m=m, n=n)


@dataclass
class BridgeReport:
    """Mass of samples that fall off the training support.

    Attributes
    ----------
    tau: float
        Distance threshold.
    off_support_fraction: float
        Fraction of samples whose nearest training point is farther than ``tau``.
    distances: np.ndarray
        Nearest-training-point distance of every sample.
    """

    tau: float
    off_support_fraction: float
    distances: np.ndarray = field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "off_support_fraction": self.off_support_fraction,
            "m": int(self.distances.shape[0]),
            "max_distance": float(self.distances.max()) if self.distances.size else None,
        }


def auto_tau(train: DataMatrix, threads: int = 1) -> float:
    """Three times the 95th percentile of the training set's own 1-NN distances."""
    if train.n < 2:
        raise ArgumentError("automatic tau needs at least two training points")
    spacing = knn_distances(train, 1, threads=threads, allow_zero=True).distances[:, 0]
    return 3.0 * float(np.percentile(spacing, 95))


def bridge_mass(
    samples: DataMatrix, train: DataMatrix, tau: Union[float, str, None] = "auto", threads: int = 1
) -> BridgeReport:
    """Fraction of ``samples`` farther than ``tau`` from every row of ``train``."""
    if train.n == 0:
        raise ArgumentError("training set is empty")
    threshold = auto_tau(train, threads) if tau is None or tau == "auto" else float(tau)
    if threshold < 0:
        raise ArgumentError(f"tau must be non-negative, got {tau}")
    distances = nn_distance_to_set(samples, train, threads=threads)
    fraction = int(np.count_nonzero(distances > threshold)) / samples.n
    return BridgeReport(tau=threshold, off_support_fraction=fraction, distances=distances)


def pearson_r_and_pvalue(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Pearson correlation and the two-sided t-test p-value of independence.

    ``|r| = 1`` yields ``p = 0``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ArgumentError(f"inputs must be vectors of equal length, got {x.shape} and {y.shape}")
    n = x.shape[0]
    if n < 3:
        raise ArgumentError(f"need at least 3 pairs, got {n}")
    xc, yc = x - x.mean(), y - y.mean()
    sxx, syy = float(np.dot(xc, xc)), float(np.dot(yc, yc))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant input vector")
    r = float(np.clip(np.dot(xc, yc) / math.sqrt(sxx * syy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return r, p


def id_accuracy_report(d_hats: Sequence[float], accuracies: Sequence[float]) -> Dict[str, Any]:
    """Correlation and least-squares line of accuracy against the dimension estimate."""
    if len(d_hats) != len(accuracies):
        raise ArgumentError(f"got {len(d_hats)} estimates but {len(accuracies)} accuracies")
    r, p = pearson_r_and_pvalue(d_hats, accuracies)
    fit = stats.linregress(np.asarray(d_hats, dtype=np.float64), np.asarray(accuracies, dtype=np.float64))
    slope, intercept = float(fit.slope), float(fit.intercept)
    return {
        "r": r,
        "p": p,
        "slope": slope,
        "intercept": intercept,
        "n": len(d_hats),
        "points": [
            {"x": float(x), "y": float(y), "fit": slope * float(x) + intercept} for x, y in zip(d_hats, accuracies)
        ],
    }


def write_plot_tsv(path: str, x: Sequence[float], y: Sequence[float], fit: Optional[Sequence[float]] = None) -> None:
    """Write plot data as ``x<TAB>y<TAB>fit`` lines (``fit`` left empty when absent)."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("x\ty\tfit\n")
        for i, (a, b) in enumerate(zip(x, y)):
            c = "" if fit is None else repr(float(fit[i]))
            f.write(f"{float(a)!r}\t{float(b)!r}\t{c}\n")


@dataclass
class ChiSquareResult:
    """Goodness of fit of observed counts to multinomial probabilities."""

    statistic: float
    p_value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.threshold


def multinomial_chi2(counts: Sequence[int], p: Sequence[float], alpha: float = 1e-6) -> ChiSquareResult:
    """Pearson chi-square of ``counts`` against ``Multinomial(sum(counts), p)``.

    ``threshold`` is the ``1 - alpha`` quantile of the chi-square
    distribution with ``len(p) - 1`` degrees of freedom.
    """
    counts = np.asarray(counts, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if counts.shape != p.shape or counts.size < 2:
        raise ArgumentError("counts and probabilities must have the same length >= 2")
    expected = counts.sum() * p
    result = stats.chisquare(counts, f_exp=expected)
    threshold = float(stats.chi2.ppf(1.0 - alpha, counts.size - 1))
    return ChiSquareResult(statistic=float(result.statistic), p_value=float(result.pvalue), threshold=threshold)
