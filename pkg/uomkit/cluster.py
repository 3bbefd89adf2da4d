"""Unsupervised partitioning into ``L`` clusters.

Two clusterers are provided: agglomerative clustering with Ward's
criterion and k-means++ (D^2 seeding followed by Lloyd iterations).

Ward's cost of merging clusters ``A`` and ``B`` is the increase of the
within-cluster sum of squares,

    cost(A, B) = |A| |B| / (|A| + |B|) * ||mu_A - mu_B||^2,

and is maintained with the Lance-Williams recurrence so raw points are
only touched once. Clusters carry creation ids: singletons are
``0 .. n-1`` and every merge creates the next id. Cost ties go to the
lexicographically smallest pair of creation ids.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.metrics import adjusted_rand_score

from .data import DataMatrix, GroupIndex
from .errors import ArgumentError
from .rng import make_rng

logger = logging.getLogger(__name__)

LLOYD_MAX_ITER = 300


@dataclass
class Merge:
    """One entry of the merge log (dendrogram)."""

    step: int
    left_id: int
    right_id: int
    cost: float
    new_size: int
    new_id: int


@dataclass
class WardLinkage:
    """Active clusters of an agglomeration together with their merge costs.

    Attributes
    ----------
    costs: np.ndarray
        Symmetric ``(n, n)`` matrix of Ward costs between slots; only
        rows and columns of active slots are meaningful.
    ids: np.ndarray
        Creation id of the cluster held by each slot.
    sizes: np.ndarray
        Size of the cluster held by each slot.
    active: np.ndarray
        Boolean mask of slots holding a live cluster.
    row_min: np.ndarray
        Cached smallest cost of each active row.
    partner: np.ndarray
        Slot attaining ``row_min`` (smallest creation id among ties).
    merges: List[Merge]
        Merge log so far.
    """

    costs: np.ndarray
    ids: np.ndarray
    sizes: np.ndarray
    active: np.ndarray
    row_min: np.ndarray
    partner: np.ndarray
    merges: List[Merge] = field(default_factory=list)
    next_id: int = 0

    @classmethod
    def from_points(cls, values: np.ndarray) -> "WardLinkage":
        n = values.shape[0]
        costs = 0.5 * cdist(values, values, "sqeuclidean")
        np.fill_diagonal(costs, np.inf)
        state = cls(
            costs=costs,
            ids=np.arange(n, dtype=np.int64),
            sizes=np.ones(n, dtype=np.int64),
            active=np.ones(n, dtype=bool),
            row_min=np.full(n, np.inf),
            partner=np.full(n, -1, dtype=np.int64),
            next_id=n,
        )
        for slot in range(n):
            state._refresh_row(slot)
        return state

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def _refresh_row(self, slot: int) -> None:
        others = np.flatnonzero(self.active)
        others = others[others != slot]
        if others.size == 0:
            self.row_min[slot], self.partner[slot] = np.inf, -1
            return
        row = self.costs[slot, others]
        best = row.min()
        ties = others[row == best]
        self.row_min[slot] = best
        self.partner[slot] = ties[np.argmin(self.ids[ties])]

    def best_pair(self) -> Tuple[int, int]:
        """Slots of the cheapest pair, ties resolved by creation ids."""
        slots = np.flatnonzero(self.active)
        best_cost = self.row_min[slots].min()
        best: Optional[Tuple[int, int, int, int]] = None
        for slot in slots[self.row_min[slots] == best_cost]:
            other = int(self.partner[slot])
            a, b = sorted((int(self.ids[slot]), int(self.ids[other])))
            if best is None or (a, b) < (best[0], best[1]):
                best = (a, b, int(slot), other)
        assert best is not None
        return best[2], best[3]

    def merge_step(self) -> Merge:
        """Merge the cheapest pair and update costs with Lance-Williams."""
        a, b = self.best_pair()
        if a > b:
            a, b = b, a
        cost_ab = float(self.costs[a, b])
        n_a, n_b = self.sizes[a], self.sizes[b]
        others = np.flatnonzero(self.active)
        others = others[(others != a) & (others != b)]
        n_k = self.sizes[others].astype(np.float64)
        updated = (
            (n_a + n_k) * self.costs[others, a] + (n_b + n_k) * self.costs[others, b] - n_k * cost_ab
        ) / (n_a + n_b + n_k)
        updated = np.maximum(updated, 0.0)

        left, right = sorted((int(self.ids[a]), int(self.ids[b])))
        merge = Merge(
            step=len(self.merges) + 1,
            left_id=left,
            right_id=right,
            cost=cost_ab,
            new_size=int(n_a + n_b),
            new_id=self.next_id,
        )
        self.merges.append(merge)

        # merged cluster lives in the smaller slot
        self.active[b] = False
        self.costs[b, :] = np.inf
        self.costs[:, b] = np.inf
        self.costs[a, others] = updated
        self.costs[others, a] = updated
        self.ids[a] = self.next_id
        self.sizes[a] = n_a + n_b
        self.next_id += 1

        self._refresh_row(a)
        for k, cost in zip(others.tolist(), updated.tolist()):
            if self.partner[k] in (a, b):
                self._refresh_row(k)
            elif cost < self.row_min[k]:
                self.row_min[k], self.partner[k] = cost, a
        return merge


def _check_L(n: int, L: int) -> None:
    if L < 1 or L > n:
        raise ArgumentError(f"L must satisfy 1 <= L <= n = {n}, got {L}")


def ward_agglomerative(X: DataMatrix, L: int) -> Tuple[GroupIndex, List[Merge]]:
    """Agglomerate ``X`` with Ward's criterion down to ``L`` clusters.

    Returns the partition and the merge log. Groups are numbered by
    their smallest original row.
    """
    _check_L(X.n, L)
    state = WardLinkage.from_points(X.as_float64())
    total = X.n - L
    while state.n_active > L:
        merge = state.merge_step()
        logger.debug("ward step %d: %d + %d cost %.6g", merge.step, merge.left_id, merge.right_id, merge.cost)
    logger.info("ward: %d merges, %d clusters", total, L)
    return assignment_from_merges(X.n, state.merges, L), state.merges


def assignment_from_merges(n: int, merges: Sequence[Merge], L: int) -> GroupIndex:
    """Replay the first ``n - L`` merges of a log into a partition.

    The log must come from a run that stopped at ``L`` clusters or fewer.
    """
    _check_L(n, L)
    steps = n - L
    if steps > len(merges):
        raise ArgumentError(f"merge log holds {len(merges)} merges; {steps} are needed for L={L}")
    members = {i: [i] for i in range(n)}
    for merge in merges[:steps]:
        members[merge.new_id] = members.pop(merge.left_id) + members.pop(merge.right_id)
    clusters = sorted((min(rows), rows) for rows in members.values())
    assignment = np.empty(n, dtype=np.int64)
    for label, (_, rows) in enumerate(clusters):
        assignment[rows] = label
    return GroupIndex(assignment=assignment, L=L)


def save_dendrogram(merges: Sequence[Merge], path: str) -> None:
    """Write the merge log as CSV (``step, left_id, right_id, cost, new_size``)."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", "left_id", "right_id", "cost", "new_size"])
        for m in merges:
            writer.writerow([m.step, m.left_id, m.right_id, repr(m.cost), m.new_size])


def _sq_distances(values: np.ndarray, centroids: np.ndarray, threads: int) -> np.ndarray:
    n = values.shape[0]
    out = np.empty((n, centroids.shape[0]), dtype=np.float64)
    size = max(1, (8 * 1024 * 1024) // (8 * max(centroids.shape[0], 1)))
    bounds = [(s, min(s + size, n)) for s in range(0, n, size)]

    def work(item: Tuple[int, int]) -> None:
        out[item[0] : item[1]] = cdist(values[item[0] : item[1]], centroids, "sqeuclidean")

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bounds))
    else:
        for item in bounds:
            work(item)
    return out


def kmeanspp_seeds(values: np.ndarray, L: int, rng: np.random.Generator) -> np.ndarray:
    """Row ids of ``L`` k-means++ seeds (D^2-weighted sampling)."""
    n = values.shape[0]
    chosen = [int(rng.integers(n))]
    closest = cdist(values, values[chosen], "sqeuclidean")[:, 0]
    for _ in range(1, L):
        total = closest.sum()
        if total > 0.0:
            pick = int(rng.choice(n, p=closest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            pick = int(remaining[rng.integers(remaining.size)])
        chosen.append(pick)
        closest = np.minimum(closest, cdist(values, values[pick : pick + 1], "sqeuclidean")[:, 0])
    return np.asarray(chosen, dtype=np.int64)


def _fill_empty(values: np.ndarray, assignment: np.ndarray, centroids: np.ndarray, sq: np.ndarray) -> None:
    """Give every empty cluster the point farthest from its own centroid."""
    L = centroids.shape[0]
    while True:
        sizes = np.bincount(assignment, minlength=L)
        empty = np.flatnonzero(sizes == 0)
        if empty.size == 0:
            return
        own = sq[np.arange(values.shape[0]), assignment]
        own = np.where(sizes[assignment] > 1, own, -np.inf)
        point = int(np.argmax(own))
        target = int(empty[0])
        logger.debug("reseeding empty cluster %d with row %d", target, point)
        assignment[point] = target
        centroids[target] = values[point]


def kmeans_fit(
    values: np.ndarray, L: int, seed: int, max_iter: int = LLOYD_MAX_ITER, threads: int = 1
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Run k-means++ and Lloyd iterations on a raw array.

    Returns ``(assignment, centroids, iterations)``.
    """
    values = np.asarray(values, dtype=np.float64)
    _check_L(values.shape[0], L)
    rng = make_rng(seed)
    centroids = values[kmeanspp_seeds(values, L, rng)].copy()
    assignment = np.full(values.shape[0], -1, dtype=np.int64)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        sq = _sq_distances(values, centroids, threads)
        new_assignment = np.argmin(sq, axis=1).astype(np.int64)
        _fill_empty(values, new_assignment, centroids, sq)
        converged = np.array_equal(new_assignment, assignment)
        assignment = new_assignment
        for c in range(L):
            centroids[c] = values[assignment == c].mean(axis=0)
        if converged:
            break
    logger.debug("k-means: %d iterations", iterations)
    return assignment, centroids, iterations


def kmeanspp(X: DataMatrix, L: int, seed: int, threads: int = 1) -> GroupIndex:
    """Partition ``X`` into ``L`` clusters with k-means++ and Lloyd iterations."""
    assignment, _, iterations = kmeans_fit(X.as_float64(), L, seed, threads=threads)
    logger.info("k-means++: %d clusters after %d iterations", L, iterations)
    return GroupIndex(assignment=assignment, L=L)


def label_agreement(assignment: Sequence[int], labels: Sequence[int]) -> float:
    """Adjusted Rand index between a partition and reference labels."""
    return float(adjusted_rand_score(np.asarray(labels), np.asarray(assignment)))
