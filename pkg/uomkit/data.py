"""Dataset representation, loading, saving and deterministic splitting.

A :class:`DataMatrix` is the dataset: ``n`` points in ``R^D`` stored as
a row-major array, with optional non-negative integer labels. Two file
formats are supported:

* ``csv`` -- comma separated values, one point per line, with an
  optional header row detected by a non-numeric first row. Labels live
  in a companion single-column CSV, or in a named column.
* ``raw`` -- little-endian ``f32`` (or ``f64``) values in row-major
  order, described by a JSON sidecar ``<path>.json`` of the form
  ``{"n": ..., "D": ..., "dtype": "f32", "order": "row-major"}``. The
  sidecar may carry a ``"label"`` key holding either the labels
  themselves or the name of a companion label CSV.

No normalization is ever applied on load; :func:`standardize` is
available for callers that want it.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ArgumentError,
    DataFormatError,
    DataParseError,
    DataValidationError,
    GroupIndexError,
)
from .rng import make_rng

logger = logging.getLogger(__name__)

_RAW_DTYPES = {"f32": "<f4", "f64": "<f8"}
LABEL_HEADER = "label"


@dataclass
class DataMatrix:
    """``n`` points in ``R^D`` with optional integer labels.

    Attributes
    ----------
    values: np.ndarray
        ``(n, D)`` array of finite reals (``float32`` or ``float64``).
    labels: Optional[np.ndarray]
        Length-``n`` array of non-negative integers, or ``None``.
    """

    values: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.dtype not in (np.float32, np.float64):
            values = values.astype(np.float64)
        if values.ndim != 2:
            raise DataValidationError(f"values must be a 2-D array, got shape {values.shape}")
        self.values = np.ascontiguousarray(values)
        bad = np.argwhere(~np.isfinite(self.values))
        if bad.size:
            row, col = (int(v) for v in bad[0])
            raise DataValidationError(f"non-finite value {self.values[row, col]!r} at row {row}, column {col}")
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1 or labels.shape[0] != self.values.shape[0]:
                raise DataValidationError(
                    f"labels must have length {self.values.shape[0]}, got shape {labels.shape}"
                )
            if labels.size and (not np.all(np.equal(np.mod(labels, 1), 0)) or labels.min() < 0):
                raise DataValidationError("labels must be non-negative integers")
            self.labels = labels.astype(np.int64)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def D(self) -> int:
        return int(self.values.shape[1])

    def take(self, rows: Union[Sequence[int], np.ndarray]) -> "DataMatrix":
        """Return the sub-matrix of ``rows`` (labels follow)."""
        rows = np.asarray(rows, dtype=np.int64)
        labels = None if self.labels is None else self.labels[rows]
        return DataMatrix(self.values[rows], labels)

    def as_float64(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass
class GroupIndex:
    """A partition of ``n`` points into ``L`` non-empty groups.

    Attributes
    ----------
    assignment: np.ndarray
        Length-``n`` integers in ``[0, L)``.
    L: int
        Number of groups.
    names: Optional[List[int]]
        Original label value of each group when built from labels.
    """

    assignment: np.ndarray
    L: int
    names: Optional[List[int]] = field(default=None)

    def __post_init__(self) -> None:
        assignment = np.asarray(self.assignment)
        if assignment.ndim != 1:
            raise ArgumentError("assignment must be one-dimensional")
        if assignment.size and not np.all(np.equal(np.mod(assignment, 1), 0)):
            raise ArgumentError("assignment must hold integers")
        self.assignment = assignment.astype(np.int64)
        self.L = int(self.L)
        if self.L < 1:
            raise ArgumentError(f"L must be >= 1, got {self.L}")
        if self.assignment.size:
            bad = np.flatnonzero((self.assignment < 0) | (self.assignment >= self.L))
            if bad.size:
                i = int(bad[0])
                raise GroupIndexError(f"assignment[{i}] = {self.assignment[i]} is outside [0, {self.L})")
        sizes = self.sizes
        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            raise ArgumentError(f"group {int(empty[0])} is empty; every group needs at least one point")

    @classmethod
    def from_assignment(cls, assignment: Sequence[int], L: Optional[int] = None) -> "GroupIndex":
        assignment = np.asarray(assignment, dtype=np.int64)
        if L is None:
            L = int(assignment.max()) + 1 if assignment.size else 1
        return cls(assignment=assignment, L=L)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "GroupIndex":
        """Build groups from label values, numbering them by ascending label."""
        labels = np.asarray(labels, dtype=np.int64)
        names, assignment = np.unique(labels, return_inverse=True)
        return cls(assignment=assignment.ravel(), L=len(names), names=[int(v) for v in names])

    @property
    def n(self) -> int:
        return int(self.assignment.shape[0])

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.L)[: self.L]

    def group_name(self, group: int) -> int:
        return self.names[group] if self.names is not None else group


# -----------------------------------------------------------------------------
# Loading and saving
# -----------------------------------------------------------------------------


def _infer_format(path: str, fmt: Optional[str]) -> str:
    if fmt is not None:
        if fmt not in ("csv", "raw"):
            raise ArgumentError(f"unknown dataset format {fmt!r}; expected 'csv' or 'raw'")
        return fmt
    return "csv" if path.lower().endswith((".csv", ".txt")) else "raw"


def sidecar_path(path: str) -> str:
    return path + ".json"


def load_dataset(
    path: str,
    fmt: Optional[str] = None,
    labels_path: Optional[str] = None,
    label_column: Optional[Union[int, str]] = None,
) -> DataMatrix:
    """Load a dataset from ``path``.

    Parameters
    ----------
    path: str
        Data file.
    fmt: Optional[str]
        ``"csv"`` or ``"raw"``; inferred from the extension when omitted.
    labels_path: Optional[str]
        Companion single-column label CSV.
    label_column: Optional[Union[int, str]]
        For CSV data, the column (index or header name) holding labels. A
        header column named ``label`` is used when omitted.

    Raises
    ------
    DataParseError
        Ragged or non-numeric CSV rows; the message names the row.
    DataValidationError
        Non-finite values; the message names the index.
    DataFormatError
        Raw data whose size disagrees with its sidecar.
    """
    fmt = _infer_format(path, fmt)
    if fmt == "csv":
        matrix = _load_csv(path, label_column)
    else:
        matrix = _load_raw(path)
    if labels_path is not None:
        labels = read_int_column(labels_path)
        matrix = DataMatrix(matrix.values, np.asarray(labels, dtype=np.int64))
    logger.debug("loaded %s: n=%d D=%d labels=%s", path, matrix.n, matrix.D, matrix.labels is not None)
    return matrix


def _is_numeric_row(row: List[str]) -> bool:
    try:
        for item in row:
            float(item)
    except ValueError:
        return False
    return True


def _load_csv(path: str, label_column: Optional[Union[int, str]]) -> DataMatrix:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [(number, row) for number, row in enumerate(csv.reader(f), start=1) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataParseError(f"{path} holds no data rows")
    header: Optional[List[str]] = None
    if not _is_numeric_row(rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise DataParseError(f"{path} holds a header but no data rows")
    expected = len(header) if header is not None else len(rows[0][1])
    label_index: Optional[int] = None
    if label_column is None and header is not None and LABEL_HEADER in header:
        label_column = LABEL_HEADER
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None or label_column not in header:
                raise DataParseError(f"label column {label_column!r} not found in the header of {path}")
            label_index = header.index(label_column)
        else:
            label_index = int(label_column) % expected
    values = np.empty((len(rows), expected), dtype=np.float64)
    for r, (number, row) in enumerate(rows):
        if len(row) != expected:
            noun = "field" if len(row) == 1 else "fields"
            raise DataParseError(f"row {number} has {len(row)} {noun}, expected {expected}")
        for c, item in enumerate(row):
            try:
                values[r, c] = float(item)
            except ValueError as exc:
                raise DataParseError(f"row {number}, field {c + 1}: cannot parse {item.strip()!r} as a number") from exc
    labels = None
    if label_index is not None:
        labels = values[:, label_index]
        values = np.delete(values, label_index, axis=1)
    return DataMatrix(values, labels)


def _load_raw(path: str) -> DataMatrix:
    meta_path = sidecar_path(path)
    try:
        with open(meta_path, "r", encoding="utf-8") as f:
            meta = json.load(f)
    except OSError as exc:
        raise DataFormatError(f"raw dataset {path} has no readable sidecar {meta_path}") from exc
    for key in ("n", "D", "dtype"):
        if key not in meta:
            raise DataFormatError(f"sidecar {meta_path} lacks the {key!r} key")
    if meta.get("order", "row-major") != "row-major":
        raise DataFormatError(f"unsupported order {meta['order']!r}; only row-major is supported")
    if meta["dtype"] not in _RAW_DTYPES:
        raise DataFormatError(f"unsupported dtype {meta['dtype']!r}; expected one of {sorted(_RAW_DTYPES)}")
    n, D = int(meta["n"]), int(meta["D"])
    flat = np.fromfile(path, dtype=_RAW_DTYPES[meta["dtype"]])
    if flat.size != n * D:
        raise DataFormatError(f"{path} holds {flat.size} values but its header declares n*D = {n * D}")
    values = flat.reshape(n, D).astype(np.float32 if meta["dtype"] == "f32" else np.float64)
    labels = None
    declared = meta.get("label")
    if isinstance(declared, str):
        labels = np.asarray(read_int_column(os.path.join(os.path.dirname(path), declared)), dtype=np.int64)
    elif declared is not None:
        labels = np.asarray(declared, dtype=np.int64)
    return DataMatrix(values, labels)


def save_dataset(
    X: DataMatrix,
    path: str,
    fmt: Optional[str] = None,
    labels_path: Optional[str] = None,
) -> None:
    """Write ``X`` to ``path``.

    CSV values are written with Python's shortest round-trip float
    representation, so loading returns bit-identical values. Raw data
    keeps the matrix dtype (``f32`` or ``f64``). Labels go to
    ``labels_path`` when given; otherwise raw sidecars embed them and
    CSV files get a header and a trailing ``label`` column.
    """
    fmt = _infer_format(path, fmt)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    if fmt == "csv":
        inline = X.labels is not None and labels_path is None
        with open(path, "w", encoding="utf-8", newline="") as f:
            if inline:
                f.write(",".join([f"x{j}" for j in range(X.D)] + [LABEL_HEADER]) + "\n")
            for i, row in enumerate(X.values.tolist()):
                fields = [repr(float(v)) for v in row]
                if inline:
                    fields.append(str(int(X.labels[i])))
                f.write(",".join(fields))
                f.write("\n")
    else:
        dtype = "f32" if X.values.dtype == np.float32 else "f64"
        np.ascontiguousarray(X.values, dtype=_RAW_DTYPES[dtype]).tofile(path)
        meta = {"n": X.n, "D": X.D, "dtype": dtype, "order": "row-major"}
        if X.labels is not None:
            meta["label"] = os.path.basename(labels_path) if labels_path else X.labels.tolist()
        with open(sidecar_path(path), "w", encoding="utf-8") as f:
            json.dump(meta, f, sort_keys=True)
    if X.labels is not None and labels_path is not None:
        write_int_column(labels_path, X.labels, header="label")


def read_int_column(path: str) -> List[int]:
    """Read a single-column integer CSV, skipping an optional header."""
    out: List[int] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for number, row in enumerate(csv.reader(f), start=1):
            if not row or not row[0].strip():
                continue
            if len(row) != 1:
                raise DataParseError(f"row {number} of {path} has {len(row)} fields, expected 1")
            item = row[0].strip()
            try:
                value = float(item)
            except ValueError:
                if number == 1 and not out:
                    continue
                raise DataParseError(f"row {number} of {path}: cannot parse {item!r} as an integer")
            if value != int(value):
                raise DataParseError(f"row {number} of {path}: {item!r} is not an integer")
            out.append(int(value))
    return out


def write_int_column(path: str, values: Sequence[int], header: Optional[str] = None) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header:
            f.write(header + "\n")
        for value in values:
            f.write(f"{int(value)}\n")


def save_groups(g: GroupIndex, path: str) -> None:
    """Save a GroupIndex as a single-column CSV."""
    write_int_column(path, g.assignment, header="group")


def load_groups(path: str) -> GroupIndex:
    return GroupIndex.from_assignment(read_int_column(path))


# -----------------------------------------------------------------------------
# Splitting and grouping
# -----------------------------------------------------------------------------


def split_by_group(X: DataMatrix, g: GroupIndex) -> List[DataMatrix]:
    """Split ``X`` into ``g.L`` matrices, preserving row order within each group."""
    if g.n != X.n:
        raise ArgumentError(f"assignment has length {g.n} but the dataset has {X.n} rows")
    if g.n and int(g.assignment.max()) >= g.L:
        raise GroupIndexError(f"assignment value {int(g.assignment.max())} >= L = {g.L}")
    return [X.take(np.flatnonzero(g.assignment == group)) for group in range(g.L)]


def split_train_test(X: DataMatrix, test_fraction: float, seed: int) -> Tuple[DataMatrix, DataMatrix]:
    """Deterministically split ``X`` into train and test parts.

    Rows keep their original relative order inside each part.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ArgumentError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if X.n < 2:
        raise ArgumentError("need at least two rows to split")
    n_test = min(max(int(round(X.n * test_fraction)), 1), X.n - 1)
    order = make_rng(seed).permutation(X.n)
    test_rows = np.sort(order[:n_test])
    train_rows = np.sort(order[n_test:])
    return X.take(train_rows), X.take(test_rows)


def standardize(X: DataMatrix) -> Tuple[DataMatrix, np.ndarray, np.ndarray]:
    """Center each coordinate and scale it to unit variance.

    Columns with zero variance keep a scale of one. Returns the
    standardized matrix together with the mean and scale used.
    """
    values = X.as_float64()
    mean = values.mean(axis=0)
    scale = values.std(axis=0)
    scale[scale == 0.0] = 1.0
    return DataMatrix((values - mean) / scale, X.labels), mean, scale
