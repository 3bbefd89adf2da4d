"""Configuration definitions for uomkit.

Two layers of configuration live here. The library-level dataclasses
(:class:`MlpConfig`, :class:`GmmConfig`, :class:`TwoStepConfig`,
:class:`ClusteredConfig` and :class:`SoftmaxConfig`) capture the
tunable parameters of the individual fits. :class:`RunConfig` captures
one fully-resolved command line invocation: it is assembled from the
command's schema defaults, an optional JSON/YAML config file and the
explicit flags, in that order of precedence, and is echoed verbatim
into every ``run.json``.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv

from .errors import ArgumentError

#: Environment variable consulted for the default worker count.
THREADS_ENV_VAR = "UOMKIT_THREADS"

VARIANT_K_MINUS_1 = "k-minus-1"
VARIANT_K_MINUS_2 = "k-minus-2"
VARIANTS = (VARIANT_K_MINUS_1, VARIANT_K_MINUS_2)

DEFAULT_K_LIST: Tuple[int, ...] = (3, 5, 10, 20)
DEFAULT_L = 10


@dataclass
class MlpConfig:
    """Parameters of the MLP autoencoder first step.

    Attributes
    ----------
    widths: Tuple[int, ...]
        Hidden layer widths of the encoder; the decoder mirrors them.
        An empty tuple gives a linear autoencoder.
    learning_rate: float
        Fixed step size of mini-batch gradient descent.
    epochs: int
        Number of passes over the data. Zero leaves the network at its
        initialization.
    batch_size: int
        Mini-batch size; the last batch of an epoch may be smaller.
    seed: int
        Seed of the initialization and the per-epoch shuffles.
    clip_norm: Optional[float]
        When set, the global gradient norm is clipped to this value
        before each update.
    """

    widths: Tuple[int, ...] = (64,)
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    clip_norm: Optional[float] = None

    def validate(self) -> None:
        if any(int(w) < 1 for w in self.widths):
            raise ArgumentError(f"hidden widths must be positive, got {self.widths}")
        if not self.learning_rate > 0:
            raise ArgumentError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ArgumentError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size < 1:
            raise ArgumentError(f"batch_size must be positive, got {self.batch_size}")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ArgumentError(f"clip_norm must be positive, got {self.clip_norm}")


@dataclass
class GmmConfig:
    """Parameters of the diagonal Gaussian mixture EM fit."""

    max_iter: int = 200
    tol: float = 1e-6
    seed: int = 0
    var_floor: float = 1e-6


@dataclass
class TwoStepConfig:
    """Parameters of a two-step pushforward fit.

    Attributes
    ----------
    base_kind: str
        ``"gaussian"`` or ``"gmm"``.
    n_components: int
        Number of mixture components when ``base_kind == "gmm"``.
    decoder_kind: str
        ``"affine"`` (PCA) or ``"mlp"`` (autoencoder).
    var_floor: float
        Lower bound applied to every latent variance.
    mlp: MlpConfig
        Autoencoder settings, used for ``decoder_kind == "mlp"``.
    gmm: GmmConfig
        EM settings, used for ``base_kind == "gmm"``.
    """

    base_kind: str = "gaussian"
    n_components: int = 10
    decoder_kind: str = "affine"
    var_floor: float = 1e-6
    mlp: MlpConfig = field(default_factory=MlpConfig)
    gmm: GmmConfig = field(default_factory=GmmConfig)

    def validate(self) -> None:
        if self.base_kind not in ("gaussian", "gmm"):
            raise ArgumentError(f"unknown base kind {self.base_kind!r}")
        if self.decoder_kind not in ("affine", "mlp"):
            raise ArgumentError(f"unknown decoder kind {self.decoder_kind!r}")
        if self.n_components < 1:
            raise ArgumentError(f"n_components must be >= 1, got {self.n_components}")


@dataclass
class ClusteredConfig:
    """Parameters of clustered training.

    Attributes
    ----------
    two_step: TwoStepConfig
        Settings shared by every per-cluster two-step fit.
    k: int
        Neighbor count of the intrinsic-dimension estimate used in
        ``auto`` and ``constant`` dimension modes.
    variant: str
        Estimator denominator variant.
    seed: int
        Parent seed; cluster ``l`` trains with sub-seed stream ``l + 1``.
    parallel: bool
        Train clusters concurrently. Results are identical to the
        sequential loop; only the memory contract changes.
    threads: int
        Worker cap for the parallel mode and the neighbor searches.
    """

    two_step: TwoStepConfig = field(default_factory=TwoStepConfig)
    k: int = 20
    variant: str = VARIANT_K_MINUS_1
    seed: int = 0
    parallel: bool = False
    threads: int = 1


@dataclass
class SoftmaxConfig:
    """Parameters of the (weighted) softmax classifier."""

    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 64
    seed: int = 0

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise ArgumentError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ArgumentError("epochs must be >= 0 and batch_size >= 1")


def default_threads() -> int:
    """Return the default worker count from the environment (``.env`` honored)."""
    load_dotenv()
    raw = os.getenv(THREADS_ENV_VAR, "1")
    try:
        threads = int(raw)
    except ValueError as exc:
        raise ArgumentError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc
    return max(1, threads)


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON or YAML config file into a flat dict of option values.

    Keys may use either dashes or underscores (``k-list`` and ``k_list``
    are the same option).
    """
    with open(path, "r", encoding="utf-8") as f:
        loaded = yaml.safe_load(f) or {}
    if not isinstance(loaded, dict):
        raise ArgumentError(f"config file {path} must contain a mapping")
    return {str(key).replace("-", "_"): value for key, value in loaded.items()}


@dataclass
class RunConfig:
    """A fully-resolved command line invocation.

    Attributes
    ----------
    subcommand: str
        Name of the command being run.
    out: str
        Output directory every artifact is written under.
    seed: int
        Root seed; all randomness in the run flows from it.
    threads: int
        Worker cap for parallelizable loops. Numeric output does not
        depend on it.
    verbosity: str
        Display verbosity. One of ``"minimal"``, ``"standard"``,
        ``"verbose"`` or ``"debug"``.
    options: Dict[str, Any]
        Command-specific options with every default filled in.
    """

    subcommand: str
    out: str = "out"
    seed: int = 0
    threads: int = 1
    verbosity: str = "standard"
    options: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_sources(
        cls,
        subcommand: str,
        defaults: Dict[str, Any],
        file_values: Optional[Dict[str, Any]] = None,
        flags: Optional[Dict[str, Any]] = None,
    ) -> "RunConfig":
        """Merge schema defaults, config-file values and explicit flags."""
        merged: Dict[str, Any] = dict(defaults)
        for source in (file_values or {}, flags or {}):
            for key, value in source.items():
                if value is not None:
                    merged[key] = value
        common = {name: merged.pop(name) for name in ("out", "seed", "threads", "verbosity") if name in merged}
        common.pop("config", None)
        merged.pop("config", None)
        if common.get("threads") is None:
            common["threads"] = default_threads()
        return cls(subcommand=subcommand, options=merged, **common)

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON-ready dict (tuples become lists)."""
        return _jsonable(asdict(self))


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def parse_int_list(value: Any) -> List[int]:
    """Parse ``"3,5,10"`` (or an already-split list) into a list of ints."""
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    parts = [p.strip() for p in str(value).split(",") if p.strip()]
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise ArgumentError(f"expected a comma-separated list of integers, got {value!r}") from exc
