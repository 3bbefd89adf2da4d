"""Maximum-likelihood intrinsic-dimension estimation.

The estimator averages, over all points, the log ratios of the distance
to the ``k``-th neighbor and the distances to the closer neighbors, and
inverts the average (inverse averaging of the per-point estimates):

    d_k = [ 1 / (n c) * sum_i sum_{j<k} log(T_k(x_i) / T_j(x_i)) ]^-1

with ``c = k - 1`` by default, or ``c = k - 2`` for the variant that is
asymptotically unbiased at small ``k``. Sums run in row order with no
reordering so the result is reproducible across platforms.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import VARIANT_K_MINUS_1, VARIANT_K_MINUS_2, VARIANTS
from .data import DataMatrix, GroupIndex, split_by_group
from .errors import ArgumentError, EstimatorUndefinedError
from .knn import NeighborTable, knn_distances
from .state import write_json

logger = logging.getLogger(__name__)

INSUFFICIENT = "insufficient"


@dataclass
class IdEstimate:
    """One intrinsic-dimension estimate.

    Attributes
    ----------
    k: int
        Neighbor count used.
    variant: str
        ``"k-minus-1"`` or ``"k-minus-2"``.
    value: float
        The estimate, positive and finite.
    n_used: int
        Number of points that contributed.
    """

    k: int
    variant: str
    value: float
    n_used: int

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "variant": self.variant, "value": self.value, "n_used": self.n_used}


def _min_k(variant: str) -> int:
    return 3 if variant == VARIANT_K_MINUS_2 else 2


def check_variant(k_list: Sequence[int], variant: str) -> None:
    if variant not in VARIANTS:
        raise ArgumentError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    too_small = [k for k in k_list if k < _min_k(variant)]
    if too_small:
        raise ArgumentError(f"variant {variant} requires k >= {_min_k(variant)}, got {too_small}")


def mle_id(T: NeighborTable, k: int, variant: str = VARIANT_K_MINUS_1) -> IdEstimate:
    """Estimate the intrinsic dimension from the first ``k`` columns of ``T``.

    Raises
    ------
    ArgumentError
        ``k`` exceeds the table or is below the variant's minimum.
    EstimatorUndefinedError
        A zero distance (or all-equal distances) makes the estimate undefined.
    """
    k = int(k)
    if k > T.k:
        raise ArgumentError(f"k={k} exceeds the neighbor table width {T.k}")
    check_variant([k], variant)
    distances = T.distances[:, :k]
    if np.any(distances <= 0.0):
        row = int(np.argwhere(distances <= 0.0)[0][0])
        raise EstimatorUndefinedError(f"zero neighbor distance at row {int(T.kept_rows[row])}; log ratio undefined")
    logs = np.log(distances[:, k - 1 : k] / distances[:, : k - 1])
    per_point = np.cumsum(logs, axis=1)[:, -1]
    total = float(np.cumsum(per_point)[-1])
    if not total > 0.0 or not math.isfinite(total):
        raise EstimatorUndefinedError(f"log-ratio sum is {total!r}; the estimate is undefined")
    c = k - 1 if variant == VARIANT_K_MINUS_1 else k - 2
    value = (T.n * c) / total
    return IdEstimate(k=k, variant=variant, value=value, n_used=T.n)


def latent_dim_from_estimate(e: Union[IdEstimate, float]) -> int:
    """Round an estimate up to a latent dimension (at least 1)."""
    value = e.value if isinstance(e, IdEstimate) else float(e)
    return max(1, int(math.ceil(value)))


@dataclass
class GroupEstimates:
    """Estimates of one group across ``k``; ``None`` marks an insufficient cell."""

    group: int
    name: int
    size: int
    removed: int
    estimates: Dict[int, Optional[IdEstimate]] = field(default_factory=dict)

    def available(self) -> List[float]:
        return [e.value for e in self.estimates.values() if e is not None]

    def summary(self) -> Dict[str, Optional[float]]:
        values = self.available()
        if not values:
            return {"min": None, "max": None, "median": None}
        return {"min": min(values), "max": max(values), "median": float(np.median(values))}


@dataclass
class IdReport:
    """Per-group, per-``k`` estimates plus the pooled whole-dataset estimate."""

    k_list: List[int]
    variant: str
    groups: List[GroupEstimates]
    pooled: Dict[int, Optional[IdEstimate]]
    pooled_used: int = 0

    def estimate(self, group: int, k: int) -> Optional[IdEstimate]:
        return self.groups[group].estimates.get(k)

    def values_for_k(self, k: int) -> List[Optional[float]]:
        return [None if g.estimates.get(k) is None else g.estimates[k].value for g in self.groups]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "k_list": list(self.k_list),
            "groups": [
                {
                    "group": g.group,
                    "name": g.name,
                    "size": g.size,
                    "removed": g.removed,
                    "estimates": [_cell(k, g.estimates.get(k)) for k in self.k_list],
                    "summary": g.summary(),
                }
                for g in self.groups
            ],
            "pooled": [_cell(k, self.pooled.get(k)) for k in self.k_list],
        }

    def to_json(self, path: str) -> None:
        write_json(path, self.to_dict())

    def to_csv(self, path: str) -> None:
        """Long-form CSV: ``group, k, variant, estimate, n_used``."""
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["group", "k", "variant", "estimate", "n_used"])
            for g in self.groups:
                for k in self.k_list:
                    writer.writerow(_csv_row(g.name, k, self.variant, g.estimates.get(k), g.size - g.removed))
            for k in self.k_list:
                writer.writerow(_csv_row("pooled", k, self.variant, self.pooled.get(k), self.pooled_used))

    def write_boxplot_tsv(self, path: str) -> None:
        """Per-group estimates across ``k`` as ``group<TAB>k<TAB>estimate`` lines."""
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write("group\tk\testimate\n")
            for g in self.groups:
                for k in self.k_list:
                    e = g.estimates.get(k)
                    if e is not None:
                        f.write(f"{g.name}\t{k}\t{e.value!r}\n")


def _cell(k: int, e: Optional[IdEstimate]) -> Dict[str, Any]:
    if e is None:
        return {"k": k, "status": INSUFFICIENT, "value": None, "n_used": None}
    return {"k": k, "status": "ok", "value": e.value, "n_used": e.n_used}


def _csv_row(name: Any, k: int, variant: str, e: Optional[IdEstimate], n_points: int) -> List[Any]:
    if e is None:
        return [name, k, variant, INSUFFICIENT, n_points]
    return [name, k, variant, repr(e.value), e.n_used]


def estimate_over_k(
    X: DataMatrix,
    k_list: Sequence[int],
    variant: str = VARIANT_K_MINUS_1,
    dedup: bool = True,
    backend: str = "brute",
    threads: int = 1,
) -> Tuple[Dict[int, Optional[IdEstimate]], int]:
    """Estimate at every ``k`` from one neighbor search with the largest usable ``k``.

    Returns the estimates (``None`` where the set is too small for ``k``)
    and the number of duplicates removed.
    """
    k_list = [int(k) for k in k_list]
    check_variant(k_list, variant)
    n_distinct = X.n
    if dedup and X.n > 1:
        n_distinct = int(np.unique(X.as_float64(), axis=0).shape[0])
    usable = [k for k in k_list if k < n_distinct]
    estimates: Dict[int, Optional[IdEstimate]] = {k: None for k in k_list}
    removed = X.n - n_distinct
    if not usable:
        return estimates, removed
    table = knn_distances(X, max(usable), dedup=dedup, backend=backend, threads=threads)
    for k in usable:
        estimates[k] = mle_id(table, k, variant)
    return estimates, table.removed


def per_group_id(
    X: DataMatrix,
    g: Optional[GroupIndex],
    k_list: Sequence[int],
    variant: str = VARIANT_K_MINUS_1,
    dedup: bool = True,
    backend: str = "brute",
    threads: int = 1,
) -> IdReport:
    """Estimate the intrinsic dimension of every group and of the pooled data.

    Groups too small for some ``k`` get an insufficient cell for that
    ``k`` rather than an error. ``g=None`` treats the dataset as a single
    group.
    """
    if g is None:
        g = GroupIndex.from_assignment(np.zeros(X.n, dtype=np.int64), L=1)
    k_list = [int(k) for k in k_list]
    check_variant(k_list, variant)
    groups: List[GroupEstimates] = []
    for index, part in enumerate(split_by_group(X, g)):
        estimates, removed = estimate_over_k(part, k_list, variant, dedup, backend, threads)
        entry = GroupEstimates(group=index, name=g.group_name(index), size=part.n, removed=removed, estimates=estimates)
        missing = [k for k, e in estimates.items() if e is None]
        if missing:
            logger.warning("group %s (n=%d) too small for k=%s", entry.name, part.n, missing)
        logger.info(
            "group %s: %s",
            entry.name,
            ", ".join(f"k={k}: {e.value:.3f}" for k, e in estimates.items() if e is not None) or INSUFFICIENT,
        )
        groups.append(entry)
    pooled, pooled_removed = estimate_over_k(X, k_list, variant, dedup, backend, threads)
    return IdReport(k_list=k_list, variant=variant, groups=groups, pooled=pooled, pooled_used=X.n - pooled_removed)
