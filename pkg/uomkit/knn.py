"""Exact k-nearest-neighbor distances under the Euclidean metric.

Two interchangeable backends are provided:

* ``"brute"`` -- a chunked scan of all pairs, the correctness oracle and
  the default, and
* ``"vptree"`` -- a vantage-point tree searched with exact pruning.

Both backends obtain every distance from :func:`pairwise_distances`, so
the same pair always yields the same 64-bit value and the two backends
return identical tables. Ties are broken by ascending row index.
"""

from __future__ import annotations

import csv
import heapq
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .data import DataMatrix
from .errors import ArgumentError, DuplicatePointError

logger = logging.getLogger(__name__)

BACKENDS = ("brute", "vptree")

# Bytes of distance matrix processed per chunk of the brute-force scan.
_CHUNK_BYTES = 32 * 1024 * 1024

# Relative slack on triangle-inequality pruning; keeps boundary ties.
_PRUNE_SLACK = 1e-9


@dataclass
class NeighborTable:
    """Sorted distances to the ``k`` nearest neighbors of every point.

    Attributes
    ----------
    distances: np.ndarray
        ``(n, k)`` float64, every row non-decreasing.
    indices: np.ndarray
        ``(n, k)`` original row ids of the neighbors.
    kept_rows: np.ndarray
        Original row id of each table row. When duplicates were removed
        this is a strict subset of the input rows.
    removed: int
        Number of duplicate rows dropped before the search.
    """

    distances: np.ndarray
    indices: np.ndarray
    kept_rows: np.ndarray
    removed: int = 0

    @property
    def n(self) -> int:
        return int(self.distances.shape[0])

    @property
    def k(self) -> int:
        return int(self.distances.shape[1])


def pairwise_distances(Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Euclidean distances between every row of ``Q`` and every row of ``R``.

    Each entry depends only on its own pair of rows, never on the shape
    of the batch it was computed in.
    """
    Q = np.asarray(Q, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    return np.sqrt(cdist(Q, R, "sqeuclidean"))


def _chunk_rows(n_rows: int, n_cols: int) -> int:
    return max(1, min(n_rows, _CHUNK_BYTES // (8 * max(n_cols, 1))))


def _chunks(n: int, size: int) -> List[Tuple[int, int]]:
    return [(start, min(start + size, n)) for start in range(0, n, size)]


def _k_smallest(row: np.ndarray, k: int) -> np.ndarray:
    """Positions of the ``k`` smallest entries of ``row``, ties by position."""
    threshold = np.partition(row, k - 1)[k - 1]
    candidates = np.flatnonzero(row <= threshold)
    order = np.argsort(row[candidates], kind="stable")
    return candidates[order[:k]]


def dedup_rows(values: np.ndarray) -> np.ndarray:
    """Return the sorted row ids of the first occurrence of every distinct row."""
    _, first = np.unique(values, axis=0, return_index=True)
    return np.sort(first)


def knn_distances(
    X: DataMatrix,
    k: int,
    dedup: bool = False,
    backend: str = "brute",
    threads: int = 1,
    allow_zero: bool = False,
) -> NeighborTable:
    """Exact ``k`` nearest neighbors of every point of ``X`` (self excluded).

    Parameters
    ----------
    X: DataMatrix
        Points to search among.
    k: int
        Neighbors per point, ``1 <= k < n``.
    dedup: bool
        Drop exact duplicate rows (keeping first occurrences) before the
        search. The number removed is logged and stored in the table.
    backend: str
        ``"brute"`` or ``"vptree"``.
    threads: int
        Worker cap; results never depend on it.
    allow_zero: bool
        Accept zero distances instead of raising. Callers that need raw
        nearest-neighbor spacing (not the estimator) set this.

    Raises
    ------
    ArgumentError
        ``k`` outside ``[1, n)`` or an unknown backend.
    DuplicatePointError
        A zero distance was found while ``dedup`` and ``allow_zero`` are unset.
    """
    if backend not in BACKENDS:
        raise ArgumentError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    values = X.as_float64()
    kept_rows = np.arange(X.n, dtype=np.int64)
    removed = 0
    if dedup:
        kept_rows = dedup_rows(values)
        removed = X.n - kept_rows.size
        if removed:
            logger.warning("%d duplicate%s removed", removed, "" if removed == 1 else "s")
            values = values[kept_rows]
    n = values.shape[0]
    k = int(k)
    if k < 1 or k >= n:
        raise ArgumentError(f"k must satisfy 1 <= k < n, got k={k} with n={n}")

    if backend == "brute":
        positions, distances = _brute_search(values, k, threads)
    else:
        positions, distances = VPTree(values).query_all(k, threads)

    if not allow_zero:
        zero = np.flatnonzero(distances[:, 0] == 0.0)
        if zero.size:
            i = int(zero[0])
            a, b = int(kept_rows[i]), int(kept_rows[positions[i, 0]])
            raise DuplicatePointError(
                f"rows {min(a, b)} and {max(a, b)} coincide (zero distance); enable dedup to remove duplicates"
            )
    logger.debug("knn (%s): n=%d k=%d removed=%d", backend, n, k, removed)
    return NeighborTable(distances=distances, indices=kept_rows[positions], kept_rows=kept_rows, removed=removed)


def _brute_search(values: np.ndarray, k: int, threads: int) -> Tuple[np.ndarray, np.ndarray]:
    n = values.shape[0]
    positions = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)

    def work(bounds: Tuple[int, int]) -> None:
        start, stop = bounds
        block = pairwise_distances(values[start:stop], values)
        block[np.arange(stop - start), np.arange(start, stop)] = np.inf
        for r in range(stop - start):
            chosen = _k_smallest(block[r], k)
            positions[start + r] = chosen
            distances[start + r] = block[r, chosen]

    bounds = _chunks(n, _chunk_rows(n, n))
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bounds))
    else:
        for item in bounds:
            work(item)
    return positions, distances


class _Node:
    __slots__ = ("vantage", "radius", "inside", "outside", "bucket")

    def __init__(self) -> None:
        self.vantage: int = -1
        self.radius: float = 0.0
        self.inside: Optional["_Node"] = None
        self.outside: Optional["_Node"] = None
        self.bucket: Optional[np.ndarray] = None


class VPTree:
    """Vantage-point tree over the rows of a matrix.

    The first row of every subset is its vantage point. The nearer half
    of the remaining rows (ties by row id) forms the inside ball, whose
    radius is its largest distance; the rest form the outside shell.
    Subsets of at most ``leaf_size`` rows become leaf buckets.
    Construction is deterministic and the depth is logarithmic even
    when distances tie.
    """

    def __init__(self, values: np.ndarray, leaf_size: int = 16):
        self.values = np.asarray(values, dtype=np.float64)
        self.leaf_size = max(1, int(leaf_size))
        self.root = self._build(np.arange(self.values.shape[0], dtype=np.int64))

    def _build(self, rows: np.ndarray) -> Optional[_Node]:
        if rows.size == 0:
            return None
        node = _Node()
        if rows.size <= self.leaf_size:
            node.bucket = rows
            return node
        node.vantage = int(rows[0])
        rest = rows[1:]
        dist = pairwise_distances(self.values[node.vantage : node.vantage + 1], self.values[rest])[0]
        # split by rank, not by value
        order = np.argsort(dist, kind="stable")
        half = (rest.size + 1) // 2
        node.radius = float(dist[order[half - 1]])
        node.inside = self._build(rest[order[:half]])
        node.outside = self._build(rest[order[half:]])
        return node

    def query(self, position: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """``k`` nearest neighbors of row ``position``, excluding itself."""
        point = self.values[position : position + 1]
        # max-heap of the current best candidates keyed by (distance, row)
        best: List[Tuple[float, int]] = []

        def offer(dist: float, row: int) -> None:
            if row == position:
                return
            if len(best) < k:
                heapq.heappush(best, (-dist, -row))
            elif (dist, row) < (-best[0][0], -best[0][1]):
                heapq.heapreplace(best, (-dist, -row))

        def bound() -> float:
            return -best[0][0] if len(best) == k else np.inf

        def visit(node: Optional[_Node]) -> None:
            if node is None:
                return
            if node.bucket is not None:
                dist = pairwise_distances(point, self.values[node.bucket])[0]
                for d, row in zip(dist.tolist(), node.bucket.tolist()):
                    offer(d, row)
                return
            d = float(pairwise_distances(point, self.values[node.vantage : node.vantage + 1])[0, 0])
            offer(d, node.vantage)
            near_first = d <= node.radius
            for side in ((node.inside, node.outside) if near_first else (node.outside, node.inside)):
                tau = bound()
                slack = _PRUNE_SLACK * (d + node.radius + (0.0 if np.isinf(tau) else tau))
                if side is node.inside and d - node.radius > tau + slack:
                    continue
                if side is node.outside and node.radius - d > tau + slack:
                    continue
                visit(side)

        visit(self.root)
        ordered = sorted((-nd, -nr) for nd, nr in best)
        return (
            np.array([row for _, row in ordered], dtype=np.int64),
            np.array([dist for dist, _ in ordered], dtype=np.float64),
        )

    def query_all(self, k: int, threads: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        n = self.values.shape[0]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda p: self.query(p, k), range(n)))
        else:
            results = [self.query(p, k) for p in range(n)]
        positions = np.stack([r[0] for r in results])
        distances = np.stack([r[1] for r in results])
        return positions, distances


def nn_distance_to_set(Q: DataMatrix, R: DataMatrix, threads: int = 1) -> np.ndarray:
    """Distance from every row of ``Q`` to its nearest row of ``R``.

    ``Q`` and ``R`` are treated as distinct sets, so a query equal to a
    reference row gets distance zero.
    """
    if Q.D != R.D:
        raise ArgumentError(f"dimension mismatch: queries have D={Q.D}, references have D={R.D}")
    if R.n == 0:
        raise ArgumentError("reference set is empty")
    queries = Q.as_float64()
    references = R.as_float64()
    out = np.empty(Q.n, dtype=np.float64)

    def work(bounds: Tuple[int, int]) -> None:
        start, stop = bounds
        out[start:stop] = pairwise_distances(queries[start:stop], references).min(axis=1)

    bounds = _chunks(Q.n, _chunk_rows(Q.n, R.n))
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bounds))
    else:
        for item in bounds:
            work(item)
    return out


def dump_neighbor_table(T: NeighborTable, path: str) -> None:
    """Write ``T`` as a long CSV (``i, j, index, distance``) for debugging.

    ``i`` and ``index`` are original row ids; ``j`` is the 1-based rank.
    """
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["i", "j", "index", "distance"])
        for p in range(T.n):
            for j in range(T.k):
                writer.writerow([int(T.kept_rows[p]), j + 1, int(T.indices[p, j]), repr(float(T.distances[p, j]))])
