"""Synthetic union-of-manifolds datasets with known intrinsic dimensions.

Three building blocks are provided: uniform samples of a hypercube
embedded affinely in ``R^D``, samples pushed through a fixed random
``tanh`` network with all but the first ``m`` latent coordinates zeroed,
and a composer that translates components apart until a requested gap
separates them.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .data import DataMatrix
from .errors import ArgumentError, PlacementError
from .knn import nn_distance_to_set
from .rng import make_rng
from .state import write_json

logger = logging.getLogger(__name__)

DEFAULT_WIDTHS: Tuple[int, ...] = (64, 64)
MAX_PLACEMENT_ATTEMPTS = 64


@dataclass
class ComponentTruth:
    """Ground truth of one generated component.

    Attributes
    ----------
    dim: int
        True intrinsic dimension.
    kind: str
        ``"affine"`` or ``"pushforward"``.
    seed: int
        Seed the component was generated from.
    n: int
        Number of points.
    D: int
        Ambient dimension.
    params: Dict[str, Any]
        Generator-specific settings (noise scale, latent size, widths).
    """

    dim: int
    kind: str
    seed: int
    n: int
    D: int
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class SyntheticTruth:
    """Ground truth of a synthetic dataset, written as ``truth.json``."""

    components: List[ComponentTruth]
    gap: Optional[float] = None
    min_distance: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "components": [asdict(c) for c in self.components],
            "gap": self.gap,
            "min_distance": self.min_distance,
        }

    def save(self, path: str) -> None:
        write_json(path, self.to_dict())


def gen_affine_manifold(
    n: int, d: int, D: int, seed: int, noise_sigma: float = 0.0
) -> Tuple[DataMatrix, SyntheticTruth]:
    """Uniform samples of ``[0, 1]^d`` mapped by ``x = A z + b`` into ``R^D``.

    ``A`` has orthonormal columns; isotropic Gaussian noise of scale
    ``noise_sigma`` is added when positive.
    """
    if not 1 <= d <= D:
        raise ArgumentError(f"need 1 <= d <= D, got d={d}, D={D}")
    if noise_sigma < 0:
        raise ArgumentError(f"noise_sigma must be non-negative, got {noise_sigma}")
    if n < 1:
        raise ArgumentError(f"n must be positive, got {n}")
    rng = make_rng(seed)
    A, _ = np.linalg.qr(rng.standard_normal((D, d)))
    b = rng.standard_normal(D)
    z = rng.random((n, d))
    values = z @ A.T + b
    if noise_sigma > 0:
        values = values + noise_sigma * rng.standard_normal((n, D))
    truth = ComponentTruth(dim=d, kind="affine", seed=seed, n=n, D=D, params={"noise_sigma": noise_sigma})
    return DataMatrix(values), SyntheticTruth(components=[truth])


@dataclass
class PushforwardGenerator:
    """A fixed random network ``R^d_latent -> R^D`` with ``tanh`` hidden layers."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @classmethod
    def from_seed(
        cls, d_latent: int, D: int, seed: int, widths: Sequence[int] = DEFAULT_WIDTHS
    ) -> "PushforwardGenerator":
        rng = make_rng(seed, stream=0)
        sizes = [d_latent, *widths, D]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = 1.0 / np.sqrt(fan_in)
            weights.append(scale * rng.standard_normal((fan_in, fan_out)))
            biases.append(scale * rng.standard_normal(fan_out))
        return cls(weights=weights, biases=biases)

    def forward(self, z: np.ndarray) -> np.ndarray:
        h = np.asarray(z, dtype=np.float64)
        last = len(self.weights) - 1
        for layer, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if layer < last:
                h = np.tanh(h)
        return h


def masked_latents(n: int, d_latent: int, m: int, seed: int) -> np.ndarray:
    """Standard normal latents with every coordinate past the first ``m`` set to zero."""
    z = make_rng(seed, stream=1).standard_normal((n, d_latent))
    z[:, m:] = 0.0
    return z


def gen_pushforward_manifold(
    n: int,
    d_latent: int,
    m: int,
    D: int,
    seed: int,
    widths: Sequence[int] = DEFAULT_WIDTHS,
) -> Tuple[DataMatrix, SyntheticTruth]:
    """Samples ``G0(z)`` of a random network with only ``m`` live latent coordinates.

    The recorded true dimension is ``m``.
    """
    if not 0 <= m <= d_latent <= D:
        raise ArgumentError(f"need 0 <= m <= d_latent <= D, got m={m}, d_latent={d_latent}, D={D}")
    if n < 1:
        raise ArgumentError(f"n must be positive, got {n}")
    generator = PushforwardGenerator.from_seed(d_latent, D, seed, widths)
    values = generator.forward(masked_latents(n, d_latent, m, seed))
    truth = ComponentTruth(
        dim=m,
        kind="pushforward",
        seed=seed,
        n=n,
        D=D,
        params={"d_latent": d_latent, "widths": list(widths)},
    )
    return DataMatrix(values), SyntheticTruth(components=[truth])


def compose_union(
    components: Sequence[Tuple[DataMatrix, SyntheticTruth]],
    gap: float,
    seed: int = 0,
    max_attempts: int = MAX_PLACEMENT_ATTEMPTS,
) -> Tuple[DataMatrix, SyntheticTruth]:
    """Translate components apart and concatenate them with component labels.

    The first component stays in place. Every later component moves
    along a fresh random unit direction by a shift starting at ``gap``
    and doubling until its nearest distance to the components already
    placed is at least ``gap``.

    Raises
    ------
    PlacementError
        The gap was not reached within ``max_attempts`` doublings.
    """
    if not components:
        raise ArgumentError("compose_union needs at least one component")
    if gap < 0:
        raise ArgumentError(f"gap must be non-negative, got {gap}")
    D = components[0][0].D
    if any(X.D != D for X, _ in components):
        raise ArgumentError("all components must share the ambient dimension D")
    rng = make_rng(seed)
    placed: List[np.ndarray] = [components[0][0].as_float64()]
    min_distance = np.inf
    for index, (X, _) in enumerate(components[1:], start=1):
        direction = rng.standard_normal(D)
        direction /= np.linalg.norm(direction)
        reference = DataMatrix(np.concatenate(placed))
        shift = float(gap)
        for _ in range(max_attempts):
            moved = X.as_float64() + shift * direction
            distance = float(nn_distance_to_set(DataMatrix(moved), reference).min())
            if distance >= gap:
                break
            shift = 2.0 * shift if shift > 0 else 1.0
        else:
            raise PlacementError(f"component {index} did not reach gap {gap} after {max_attempts} attempts")
        logger.debug("component %d shifted by %.4g (nearest distance %.4g)", index, shift, distance)
        min_distance = min(min_distance, distance)
        placed.append(moved)
    labels = np.concatenate([np.full(X.n, i, dtype=np.int64) for i, (X, _) in enumerate(components)])
    truth = SyntheticTruth(
        components=[c for _, t in components for c in t.components],
        gap=float(gap),
        min_distance=None if len(components) == 1 else min_distance,
    )
    return DataMatrix(np.concatenate(placed), labels), truth
