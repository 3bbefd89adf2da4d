"""Clustered pushforward models.

A clustered model is a mixture of ``L`` two-step models, one per
cluster, whose mixture weights are the cluster proportions
``p(l) = |D_l| / sum |D_l'|``. Training fits the clusters one after the
other and, when a bundle directory is given, persists and releases each
model before the next one starts. Sampling first splits ``m`` with a
multinomial draw and then loads, samples and releases the models one at
a time, so at most one model is resident at any moment.

Bundle layout::

    <dir>/manifest.json      L, sizes, dims, weights, per-cluster layouts
    <dir>/cluster_000.params raw parameter blob of cluster 0
    ...

The manifest is the single source of truth for weights and dims.
"""

from __future__ import annotations

import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np

from .blob import FORMAT_VERSION, pack_arrays, read_blob, unpack_arrays, write_blob
from .config import ClusteredConfig
from .data import DataMatrix, GroupIndex, split_by_group
from .errors import ArgumentError, IntegrityError, ModelLoadError, UomError, TrainingError
from .idest import estimate_over_k, latent_dim_from_estimate, per_group_id
from .rng import derive_seed, make_rng
from .state import read_json, write_json
from .twostep import PushforwardModel, fit_two_step, model_from_arrays, model_to_arrays, sample

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"

DIMS_AUTO = "auto"
DIMS_CONSTANT = "constant"

_WEIGHT_TOLERANCE = 1e-12


def cluster_file(index: int) -> str:
    return f"cluster_{index:03d}.params"


class ResidencyTracker:
    """Counts the models currently held by a training or sampling loop."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.current = 0
        self.peak = 0
        self.events: List[str] = []

    @contextmanager
    def resident(self, index: int) -> Iterator[None]:
        with self._lock:
            self.current += 1
            self.peak = max(self.peak, self.current)
            self.events.append(f"load {index}")
        try:
            yield
        finally:
            with self._lock:
                self.current -= 1
                self.events.append(f"release {index}")


@dataclass
class ClusterEntry:
    """One mixture component of a clustered model.

    Attributes
    ----------
    index: int
        Cluster id ``l``.
    size: int
        ``|D_l|``, the number of training points of the cluster.
    dim: int
        Latent dimension ``d^(l)`` used for the fit.
    d_hat: Optional[float]
        Estimate the dimension was derived from (``None`` for given dims).
    model: Optional[PushforwardModel]
        In-memory model, or ``None`` when it lives in the bundle.
    spec: Optional[Dict[str, Any]]
        Model description recorded in the manifest.
    layout: Optional[Dict[str, Any]]
        Blob layout and checksum recorded in the manifest.
    """

    index: int
    size: int
    dim: int
    d_hat: Optional[float] = None
    model: Optional[PushforwardModel] = None
    spec: Optional[Dict[str, Any]] = None
    layout: Optional[Dict[str, Any]] = None

    @property
    def file(self) -> str:
        return cluster_file(self.index)


@dataclass
class ClusteredModel:
    """``L`` pushforward models mixed with weights proportional to cluster sizes."""

    entries: List[ClusterEntry]
    seed: int = 0
    dims_mode: str = DIMS_AUTO
    bundle_dir: Optional[str] = None
    info: Dict[str, Any] = field(default_factory=dict)
    tracker: ResidencyTracker = field(default_factory=ResidencyTracker)

    @property
    def L(self) -> int:
        return len(self.entries)

    @property
    def sizes(self) -> List[int]:
        return [e.size for e in self.entries]

    @property
    def dims(self) -> List[int]:
        return [e.dim for e in self.entries]

    @property
    def weights(self) -> np.ndarray:
        sizes = np.asarray(self.sizes, dtype=np.float64)
        return sizes / sizes.sum()

    def _load(self, index: int) -> PushforwardModel:
        entry = self.entries[index]
        if entry.model is not None:
            return entry.model
        if self.bundle_dir is None or entry.layout is None or entry.spec is None:
            raise ModelLoadError(f"cluster {index}: no in-memory model and no bundle to load it from")
        path = os.path.join(self.bundle_dir, entry.file)
        if not os.path.exists(path):
            raise ModelLoadError(f"cluster {index}: parameter file {entry.file} is missing")
        try:
            arrays = unpack_arrays(entry.layout, read_blob(path))
        except IntegrityError as exc:
            raise IntegrityError(f"cluster {index}: {exc}") from exc
        except ModelLoadError as exc:
            raise ModelLoadError(f"cluster {index}: {exc}") from exc
        return model_from_arrays(entry.spec, arrays)

    @contextmanager
    def acquire(self, index: int) -> Iterator[PushforwardModel]:
        """Hold the model of cluster ``index`` for the duration of the block."""
        with self.tracker.resident(index):
            yield self._load(index)


def _resolve_dims(
    X: DataMatrix,
    g: GroupIndex,
    dims: Union[str, int, Sequence[int]],
    cfg: ClusteredConfig,
) -> tuple:
    """Return ``(mode, dims, d_hats)`` with one latent dim per cluster."""
    if dims == DIMS_AUTO:
        report = per_group_id(X, g, [cfg.k], cfg.variant, threads=cfg.threads)
        resolved, d_hats = [], []
        for index, group in enumerate(report.groups):
            estimate = group.estimates[cfg.k]
            if estimate is None:
                raise TrainingError(f"cluster {index}: {group.size} points are too few for k={cfg.k}")
            resolved.append(latent_dim_from_estimate(estimate))
            d_hats.append(estimate.value)
        return DIMS_AUTO, resolved, d_hats
    if dims == DIMS_CONSTANT:
        pooled, _ = estimate_over_k(X, [cfg.k], cfg.variant, threads=cfg.threads)
        estimate = pooled[cfg.k]
        if estimate is None:
            raise TrainingError(f"dataset of {X.n} points is too small for k={cfg.k}")
        d = latent_dim_from_estimate(estimate)
        return DIMS_CONSTANT, [d] * g.L, [estimate.value] * g.L
    if isinstance(dims, (int, np.integer)):
        dims = [int(dims)] * g.L
    resolved = [int(d) for d in dims]
    if len(resolved) == 1:
        resolved = resolved * g.L
    if len(resolved) != g.L:
        raise ArgumentError(f"got {len(resolved)} latent dims for {g.L} clusters")
    return "given", resolved, [None] * g.L


def train_clustered(
    X: DataMatrix,
    g: GroupIndex,
    dims: Union[str, int, Sequence[int]] = DIMS_AUTO,
    cfg: Optional[ClusteredConfig] = None,
    bundle_dir: Optional[str] = None,
) -> ClusteredModel:
    """Fit one two-step model per cluster.

    Parameters
    ----------
    X: DataMatrix
        Training data.
    g: GroupIndex
        Cluster of every row.
    dims: Union[str, int, Sequence[int]]
        ``"auto"`` (each cluster's own estimate, rounded up),
        ``"constant"`` (one pooled estimate for every cluster), or
        explicit latent dims.
    cfg: Optional[ClusteredConfig]
        Fit settings. Cluster ``l`` is fit with sub-seed
        ``derive_seed(cfg.seed, l + 1)``.
    bundle_dir: Optional[str]
        When given, each model is written there and released as soon
        as it is fit, and the manifest is written at the end.

    Raises
    ------
    TrainingError
        A cluster cannot be fit; the message names the cluster.
    """
    cfg = cfg or ClusteredConfig()
    cfg.two_step.validate()
    mode, resolved, d_hats = _resolve_dims(X, g, dims, cfg)
    parts = split_by_group(X, g)
    tracker = ResidencyTracker()
    entries = [ClusterEntry(index=i, size=p.n, dim=resolved[i], d_hat=d_hats[i]) for i, p in enumerate(parts)]
    if bundle_dir is not None:
        os.makedirs(bundle_dir, exist_ok=True)

    def fit(index: int) -> None:
        entry = entries[index]
        with tracker.resident(index):
            logger.info("cluster %d: n=%d, latent dim %d", index, entry.size, entry.dim)
            try:
                model = fit_two_step(
                    parts[index],
                    entry.dim,
                    cfg.two_step,
                    seed=derive_seed(cfg.seed, index + 1),
                    d_hat=entry.d_hat,
                )
            except UomError as exc:
                raise TrainingError(f"cluster {index}: {exc}") from exc
            entry.spec, arrays = model_to_arrays(model)
            if bundle_dir is not None:
                entry.layout, payload = pack_arrays(arrays)
                write_blob(os.path.join(bundle_dir, entry.file), payload)
            else:
                entry.model = model

    if cfg.parallel and cfg.threads > 1 and g.L > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            list(pool.map(fit, range(g.L)))
    else:
        for index in range(g.L):
            fit(index)

    model = ClusteredModel(
        entries=entries,
        seed=cfg.seed,
        dims_mode=mode,
        bundle_dir=bundle_dir,
        info={"k": cfg.k, "variant": cfg.variant, "peak_resident": tracker.peak},
        tracker=tracker,
    )
    if bundle_dir is not None:
        _write_manifest(model, bundle_dir)
    logger.info("trained %d clusters (dims %s), peak resident models %d", g.L, resolved, tracker.peak)
    return model


def sample_clustered(model: ClusteredModel, m: int, seed: int) -> DataMatrix:
    """Draw ``m`` samples labeled by their source cluster.

    Counts come from ``Multinomial(m, p)`` on stream 0 of ``seed``;
    cluster ``l`` then samples with ``derive_seed(seed, l + 1)``. Models
    of clusters with no draws are never loaded.
    """
    if m < 1:
        raise ArgumentError(f"m must be >= 1, got {m}")
    counts = make_rng(seed, stream=0).multinomial(m, model.weights)
    blocks: List[np.ndarray] = []
    labels: List[np.ndarray] = []
    for index, count in enumerate(counts.tolist()):
        if count == 0:
            continue
        with model.acquire(index) as pushforward:
            blocks.append(sample(pushforward, count, derive_seed(seed, index + 1)).values)
        labels.append(np.full(count, index, dtype=np.int64))
        logger.debug("cluster %d: %d samples", index, count)
    return DataMatrix(np.concatenate(blocks), np.concatenate(labels))


def _manifest(model: ClusteredModel) -> Dict[str, Any]:
    return {
        "format": FORMAT_VERSION,
        "L": model.L,
        "sizes": model.sizes,
        "dims": model.dims,
        "d_hats": [e.d_hat for e in model.entries],
        "weights": model.weights.tolist(),
        "seed": model.seed,
        "dims_mode": model.dims_mode,
        "info": model.info,
        "clusters": [
            {
                "index": e.index,
                "file": e.file,
                "size": e.size,
                "dim": e.dim,
                "d_hat": e.d_hat,
                "model": e.spec,
                "layout": e.layout,
            }
            for e in model.entries
        ],
    }


def _write_manifest(model: ClusteredModel, directory: str) -> None:
    write_json(os.path.join(directory, MANIFEST_FILE), _manifest(model))


def save_bundle(model: ClusteredModel, directory: str, dtype: str = "f64") -> None:
    """Persist ``model`` as a bundle directory.

    In-memory models are packed; models already living in another bundle
    are copied blob-for-blob.
    """
    os.makedirs(directory, exist_ok=True)
    for entry in model.entries:
        target = os.path.join(directory, entry.file)
        if entry.model is not None:
            entry.spec, arrays = model_to_arrays(entry.model)
            entry.layout, payload = pack_arrays(arrays, dtype)
            write_blob(target, payload)
        elif model.bundle_dir is not None and os.path.abspath(model.bundle_dir) != os.path.abspath(directory):
            write_blob(target, read_blob(os.path.join(model.bundle_dir, entry.file)))
    _write_manifest(model, directory)


def load_bundle(directory: str) -> ClusteredModel:
    """Read a bundle manifest; cluster parameters are loaded only when drawn.

    Raises
    ------
    ModelLoadError
        The manifest is missing or unreadable.
    IntegrityError
        The manifest contradicts itself (format, counts, weights).
    """
    path = os.path.join(directory, MANIFEST_FILE)
    try:
        manifest = read_json(path)
    except (OSError, ValueError) as exc:
        raise ModelLoadError(f"cannot read bundle manifest {path}: {exc}") from exc
    if manifest.get("format") != FORMAT_VERSION:
        raise IntegrityError(f"unsupported bundle format {manifest.get('format')!r}")
    clusters = manifest.get("clusters", [])
    if manifest.get("L") != len(clusters) or len(manifest.get("sizes", [])) != len(clusters):
        raise IntegrityError("manifest L, sizes and cluster list disagree")
    sizes = np.asarray(manifest["sizes"], dtype=np.float64)
    expected = sizes / sizes.sum()
    recorded = np.asarray(manifest.get("weights", []), dtype=np.float64)
    if recorded.shape != expected.shape or np.any(np.abs(recorded - expected) > _WEIGHT_TOLERANCE):
        raise IntegrityError(f"manifest weights {recorded.tolist()} do not match cluster sizes {manifest['sizes']}")
    entries = [
        ClusterEntry(
            index=int(c["index"]),
            size=int(c["size"]),
            dim=int(c["dim"]),
            d_hat=c.get("d_hat"),
            spec=c.get("model"),
            layout=c.get("layout"),
        )
        for c in clusters
    ]
    listed = [e.size for e in entries]
    if listed != [int(s) for s in manifest["sizes"]]:
        raise IntegrityError(f"cluster sizes {listed} do not match manifest sizes {manifest['sizes']}")
    return ClusteredModel(
        entries=entries,
        seed=int(manifest.get("seed", 0)),
        dims_mode=manifest.get("dims_mode", "given"),
        bundle_dir=directory,
        info=dict(manifest.get("info", {})),
    )
