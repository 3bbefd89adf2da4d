"""Two-step pushforward models.

A two-step model first learns ``d``-dimensional representations of the
data with an autoencoding map, then fits a density on the latent codes.
Samples are drawn from the latent density and pushed through the
decoder ``G``:

    Z ~ P_Z,  X = G(Z).

First steps: an affine decoder from principal component analysis, or a
small ``tanh`` MLP autoencoder trained by mini-batch gradient descent
with exact backpropagation. Second steps: a diagonal Gaussian, or a
diagonal Gaussian mixture fit by EM.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .blob import pack_arrays, read_blob, unpack_arrays, write_blob
from .cluster import kmeans_fit
from .config import GmmConfig, MlpConfig, TwoStepConfig
from .data import DataMatrix
from .errors import ArgumentError, IntegrityError, ModelLoadError, TrainingError
from .rng import make_rng
from .state import read_json, write_json

logger = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)

# Responsibility mass below which a mixture component counts as empty.
_EMPTY_MASS = 1e-10


# -----------------------------------------------------------------------------
# First step: decoders
# -----------------------------------------------------------------------------


@dataclass
class AffineDecoder:
    """``G(z) = V z + b`` with orthonormal ``V`` (``D x d``)."""

    V: np.ndarray
    b: np.ndarray
    kind: str = field(default="affine", init=False)

    @property
    def d(self) -> int:
        return int(self.V.shape[1])

    @property
    def D(self) -> int:
        return int(self.V.shape[0])

    def encode(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.b) @ self.V

    def decode(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) @ self.V.T + self.b


def reconstruction_error(decoder: Union["AffineDecoder", "MlpAutoencoder"], X: np.ndarray) -> float:
    """Mean squared residual per entry of ``decode(encode(X))``."""
    X = np.asarray(X, dtype=np.float64)
    residual = decoder.decode(decoder.encode(X)) - X
    return float(np.mean(residual * residual))


def fit_pca(X: DataMatrix, d: int) -> Tuple[AffineDecoder, np.ndarray, float]:
    """Fit the affine decoder of the top ``d`` principal directions.

    Returns the decoder, the latent codes ``V^T (x - b)`` and the
    reconstruction error. Each direction is signed so that its
    largest-magnitude entry is positive.
    """
    if not 1 <= d <= min(X.n, X.D):
        raise ArgumentError(f"latent dimension d={d} must satisfy 1 <= d <= min(n, D) = {min(X.n, X.D)}")
    values = X.as_float64()
    b = values.mean(axis=0)
    _, _, Vt = linalg.svd(values - b, full_matrices=False)
    V = Vt[:d].T.copy()
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(d)])
    signs[signs == 0] = 1.0
    V *= signs
    decoder = AffineDecoder(V=V, b=b)
    codes = decoder.encode(values)
    error = reconstruction_error(decoder, values)
    logger.debug("pca: d=%d reconstruction error %.6g", d, error)
    return decoder, codes, error


@dataclass
class MlpAutoencoder:
    """A ``tanh`` MLP autoencoder with linear code and output layers.

    Inputs are centered by ``center`` and divided by ``scale`` before the
    encoder; the decoder output is mapped back the same way.

    Attributes
    ----------
    enc_W, enc_b: List[np.ndarray]
        Encoder layers ``D -> widths... -> d``.
    dec_W, dec_b: List[np.ndarray]
        Decoder layers ``d -> reversed(widths)... -> D``.
    center: np.ndarray
        Per-coordinate input offset.
    scale: float
        Global input scale.
    losses: List[float]
        Mean training loss of every epoch.
    """

    enc_W: List[np.ndarray]
    enc_b: List[np.ndarray]
    dec_W: List[np.ndarray]
    dec_b: List[np.ndarray]
    center: np.ndarray
    scale: float = 1.0
    losses: List[float] = field(default_factory=list)
    kind: str = field(default="mlp", init=False)

    @property
    def d(self) -> int:
        return int(self.enc_W[-1].shape[1])

    @property
    def D(self) -> int:
        return int(self.enc_W[0].shape[0])

    @property
    def widths(self) -> Tuple[int, ...]:
        return tuple(int(W.shape[1]) for W in self.enc_W[:-1])

    def parameters(self) -> List[Tuple[str, np.ndarray]]:
        """Trainable arrays in a fixed order, by name (arrays are live references)."""
        named: List[Tuple[str, np.ndarray]] = []
        for prefix, Ws, bs in (("enc", self.enc_W, self.enc_b), ("dec", self.dec_W, self.dec_b)):
            for i, (W, b) in enumerate(zip(Ws, bs)):
                named.append((f"{prefix}_W{i}", W))
                named.append((f"{prefix}_b{i}", b))
        return named

    def _layers(self) -> List[Tuple[np.ndarray, np.ndarray, bool]]:
        layers = []
        for Ws, bs in ((self.enc_W, self.enc_b), (self.dec_W, self.dec_b)):
            last = len(Ws) - 1
            layers.extend((W, b, i < last) for i, (W, b) in enumerate(zip(Ws, bs)))
        return layers

    def normalize(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.center) / self.scale

    def encode(self, X: np.ndarray) -> np.ndarray:
        h = self.normalize(X)
        last = len(self.enc_W) - 1
        for i, (W, b) in enumerate(zip(self.enc_W, self.enc_b)):
            h = h @ W + b
            if i < last:
                h = np.tanh(h)
        return h

    def decode(self, Z: np.ndarray) -> np.ndarray:
        h = np.asarray(Z, dtype=np.float64)
        last = len(self.dec_W) - 1
        for i, (W, b) in enumerate(zip(self.dec_W, self.dec_b)):
            h = h @ W + b
            if i < last:
                h = np.tanh(h)
        return h * self.scale + self.center


def init_mlp_autoencoder(
    D: int,
    d: int,
    widths: Sequence[int],
    rng: np.random.Generator,
    center: Optional[np.ndarray] = None,
    scale: float = 1.0,
) -> MlpAutoencoder:
    """Weights ``~ N(0, 1/fan_in)``, zero biases."""

    def stack(sizes: List[int]) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        Ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            Ws.append(rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
            bs.append(np.zeros(fan_out))
        return Ws, bs

    widths = [int(w) for w in widths]
    enc_W, enc_b = stack([D, *widths, d])
    dec_W, dec_b = stack([d, *reversed(widths), D])
    return MlpAutoencoder(
        enc_W=enc_W,
        enc_b=enc_b,
        dec_W=dec_W,
        dec_b=dec_b,
        center=np.zeros(D) if center is None else np.asarray(center, dtype=np.float64),
        scale=float(scale),
    )


def mlp_loss_and_grads(ae: MlpAutoencoder, X: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
    """Mean squared reconstruction loss in normalized coordinates and its gradients.

    Gradients are keyed by the names of :meth:`MlpAutoencoder.parameters`.
    """
    target = ae.normalize(X)
    layers = ae._layers()
    inputs: List[np.ndarray] = []
    outputs: List[np.ndarray] = []
    h = target
    for W, b, squash in layers:
        inputs.append(h)
        h = h @ W + b
        if squash:
            h = np.tanh(h)
        outputs.append(h)
    residual = h - target
    loss = float(np.mean(residual * residual))

    delta = 2.0 * residual / residual.size
    grads: List[Tuple[np.ndarray, np.ndarray]] = []
    for index in range(len(layers) - 1, -1, -1):
        W, _, squash = layers[index]
        if squash:
            delta = delta * (1.0 - outputs[index] ** 2)
        grads.append((inputs[index].T @ delta, delta.sum(axis=0)))
        delta = delta @ W.T
    grads.reverse()

    named: Dict[str, np.ndarray] = {}
    for (name_W, _), (name_b, _), (gW, gb) in zip(ae.parameters()[0::2], ae.parameters()[1::2], grads):
        named[name_W] = gW
        named[name_b] = gb
    return loss, named


def fit_mlp_ae(X: DataMatrix, d: int, cfg: Optional[MlpConfig] = None) -> Tuple[MlpAutoencoder, float]:
    """Train an MLP autoencoder by mini-batch gradient descent.

    Returns the autoencoder and its final reconstruction error on ``X``
    (mean squared residual per entry, in data units).

    Raises
    ------
    TrainingError
        The loss became non-finite; the message names the epoch.
    """
    cfg = cfg or MlpConfig()
    cfg.validate()
    if d < 1:
        raise ArgumentError(f"latent dimension must be >= 1, got {d}")
    values = X.as_float64()
    center = values.mean(axis=0)
    scale = float(values.std())
    if scale == 0.0:
        scale = 1.0
    rng = make_rng(cfg.seed)
    ae = init_mlp_autoencoder(X.D, d, cfg.widths, rng, center=center, scale=scale)
    params = ae.parameters()
    n = X.n
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = values[order[start : start + cfg.batch_size]]
            loss, grads = mlp_loss_and_grads(ae, batch)
            if not math.isfinite(loss):
                raise TrainingError(f"autoencoder loss became non-finite at epoch {epoch}")
            if cfg.clip_norm is not None:
                norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                if norm > cfg.clip_norm:
                    for g in grads.values():
                        g *= cfg.clip_norm / norm
            for name, array in params:
                array -= cfg.learning_rate * grads[name]
            epoch_loss += loss * batch.shape[0]
        ae.losses.append(epoch_loss / n)
        logger.debug("autoencoder epoch %d loss %.6g", epoch, ae.losses[-1])
    error = reconstruction_error(ae, values)
    if not math.isfinite(error):
        raise TrainingError(f"autoencoder reconstruction became non-finite after epoch {cfg.epochs - 1}")
    return ae, error


# -----------------------------------------------------------------------------
# Second step: latent densities
# -----------------------------------------------------------------------------


@dataclass
class LatentDensity:
    """Diagonal Gaussian (``K = 1``) or diagonal Gaussian mixture.

    Attributes
    ----------
    kind: str
        ``"gaussian"`` or ``"gmm"``.
    means: np.ndarray
        ``(K, d)`` component means.
    variances: np.ndarray
        ``(K, d)`` diagonal variances.
    weights: np.ndarray
        ``(K,)`` mixture weights, positive and summing to one.
    trace: List[float]
        Mean log-likelihood per EM iteration (empty for a Gaussian).
    """

    kind: str
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray
    trace: List[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        self.variances = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        if self.means.shape != self.variances.shape or self.weights.shape[0] != self.means.shape[0]:
            raise ArgumentError("means, variances and weights disagree on the number of components")
        if np.any(self.weights <= 0) or abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ArgumentError("mixture weights must be positive and sum to one")
        if np.any(self.variances < 0):
            raise ArgumentError("variances must be non-negative")

    @property
    def K(self) -> int:
        return int(self.means.shape[0])

    @property
    def d(self) -> int:
        return int(self.means.shape[1])

    def component_log_prob(self, Z: np.ndarray) -> np.ndarray:
        """``(n, K)`` log weight plus log density of every component."""
        Z = np.asarray(Z, dtype=np.float64)
        out = np.empty((Z.shape[0], self.K))
        for c in range(self.K):
            diff = Z - self.means[c]
            out[:, c] = math.log(self.weights[c]) - 0.5 * (
                np.sum(diff * diff / self.variances[c], axis=1) + np.sum(np.log(self.variances[c])) + self.d * _LOG_2PI
            )
        return out

    def log_prob(self, Z: np.ndarray) -> np.ndarray:
        return logsumexp(self.component_log_prob(Z), axis=1)

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``m`` codes; components are picked by inverse CDF on the weights."""
        u = rng.random(m)
        components = np.minimum(np.searchsorted(np.cumsum(self.weights), u, side="right"), self.K - 1)
        noise = rng.standard_normal((m, self.d))
        return self.means[components] + np.sqrt(self.variances[components]) * noise


def _weighted_moments(Z: np.ndarray, resp: np.ndarray, var_floor: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weights, means and floored biased variances of responsibility-weighted codes."""
    mass = resp.sum(axis=0)
    means = (resp.T @ Z) / mass[:, None]
    variances = np.empty_like(means)
    for c in range(resp.shape[1]):
        diff = Z - means[c]
        variances[c] = (resp[:, c] @ (diff * diff)) / mass[c]
    return mass / Z.shape[0], means, np.maximum(variances, var_floor)


def fit_gaussian(Z: np.ndarray, var_floor: float = 1e-6) -> LatentDensity:
    """Maximum-likelihood diagonal Gaussian (biased variance, floored)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape[0] < 1:
        raise ArgumentError("cannot fit a Gaussian to zero codes")
    weights, means, variances = _weighted_moments(Z, np.ones((Z.shape[0], 1)), var_floor)
    return LatentDensity(kind="gaussian", means=means, variances=variances, weights=np.ones(1))


def fit_gmm(Z: np.ndarray, K: int, cfg: Optional[GmmConfig] = None) -> LatentDensity:
    """Diagonal Gaussian mixture fit by EM from a k-means++ initialization.

    Each iteration evaluates the log-likelihood of the current
    parameters, stops when the gain falls below ``cfg.tol``, and
    otherwise applies an M-step. A component whose responsibility mass
    vanishes is reseeded at the worst-explained code and the event is
    logged.
    """
    cfg = cfg or GmmConfig()
    Z = np.asarray(Z, dtype=np.float64)
    n = Z.shape[0]
    if K < 1 or n < K:
        raise ArgumentError(f"need 1 <= K <= n, got K={K}, n={n}")
    assignment, _, _ = kmeans_fit(Z, K, cfg.seed)
    resp = np.zeros((n, K))
    resp[np.arange(n), assignment] = 1.0
    weights, means, variances = _weighted_moments(Z, resp, cfg.var_floor)
    trace: List[float] = []
    for iteration in range(cfg.max_iter):
        density = LatentDensity(kind="gmm", means=means, variances=variances, weights=weights)
        joint = density.component_log_prob(Z)
        per_point = logsumexp(joint, axis=1)
        trace.append(float(np.mean(per_point)))
        if len(trace) > 1 and trace[-1] - trace[-2] < cfg.tol:
            break
        resp = np.exp(joint - per_point[:, None])
        weights, means, variances = _weighted_moments_reseeded(Z, resp, per_point, cfg.var_floor, iteration)
    logger.debug("gmm: K=%d, %d iterations, log-likelihood %.6g", K, len(trace), trace[-1])
    return LatentDensity(kind="gmm", means=means, variances=variances, weights=weights, trace=trace)


def _weighted_moments_reseeded(
    Z: np.ndarray, resp: np.ndarray, per_point: np.ndarray, var_floor: float, iteration: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    empty = np.flatnonzero(resp.sum(axis=0) < _EMPTY_MASS)
    if empty.size:
        worst = np.argsort(per_point, kind="stable")
        for rank, c in enumerate(empty.tolist()):
            point = int(worst[rank])
            logger.warning("gmm: component %d lost its mass at iteration %d; reseeded at code %d", c, iteration, point)
            resp[point] = 0.0
            resp[point, c] = 1.0
    weights, means, variances = _weighted_moments(Z, resp, var_floor)
    return weights / weights.sum(), means, variances


# -----------------------------------------------------------------------------
# Pushforward models
# -----------------------------------------------------------------------------

Decoder = Union[AffineDecoder, MlpAutoencoder]


@dataclass
class PushforwardModel:
    """Decoder plus latent density; samples are ``decoder.decode(Z)`` with ``Z ~ base``.

    Attributes
    ----------
    decoder: Decoder
        First-step decoder.
    base: LatentDensity
        Second-step latent density.
    meta: Dict[str, Any]
        Training metadata (``d_hat``, ``reconstruction_error``, losses).
    """

    decoder: Decoder
    base: LatentDensity
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.decoder.d != self.base.d:
            raise ArgumentError(f"decoder latent dim {self.decoder.d} differs from base dim {self.base.d}")

    @property
    def d(self) -> int:
        return self.decoder.d

    @property
    def D(self) -> int:
        return self.decoder.D


def fit_two_step(
    X: DataMatrix,
    d: int,
    cfg: Optional[TwoStepConfig] = None,
    seed: Optional[int] = None,
    d_hat: Optional[float] = None,
) -> PushforwardModel:
    """Fit the first step, then the latent density on the training codes.

    ``seed`` overrides the seeds of both sub-fits.
    """
    cfg = cfg or TwoStepConfig()
    cfg.validate()
    if seed is not None:
        cfg = replace(cfg, mlp=replace(cfg.mlp, seed=seed), gmm=replace(cfg.gmm, seed=seed))
    if not 1 <= d <= min(X.n, X.D):
        raise ArgumentError(
            f"latent dimension d={d} must satisfy 1 <= d <= min(n, D) = {min(X.n, X.D)} (n={X.n}, D={X.D})"
        )
    meta: Dict[str, Any] = {"n_train": X.n, "d": int(d), "d_hat": d_hat}
    if cfg.decoder_kind == "affine":
        decoder, codes, error = fit_pca(X, d)
        decoder_out: Decoder = decoder
    else:
        ae, error = fit_mlp_ae(X, d, cfg.mlp)
        codes = ae.encode(X.as_float64())
        decoder_out = ae
        meta["losses"] = list(ae.losses)
    meta["reconstruction_error"] = error
    if cfg.base_kind == "gaussian":
        base = fit_gaussian(codes, cfg.var_floor)
    else:
        base = fit_gmm(codes, cfg.n_components, replace(cfg.gmm, var_floor=cfg.var_floor))
        meta["log_likelihood"] = list(base.trace)
    logger.debug("two-step fit: %s decoder d=%d, %s base", cfg.decoder_kind, d, cfg.base_kind)
    return PushforwardModel(decoder=decoder_out, base=base, meta=meta)


def sample(model: PushforwardModel, m: int, seed: int) -> DataMatrix:
    """Draw ``m`` i.i.d. samples from ``model``."""
    if m < 1:
        raise ArgumentError(f"m must be >= 1, got {m}")
    rng = make_rng(seed)
    return DataMatrix(model.decoder.decode(model.base.sample(m, rng)))


# -----------------------------------------------------------------------------
# Persistence
# -----------------------------------------------------------------------------


def model_to_arrays(model: PushforwardModel) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Describe ``model`` as a JSON spec plus named parameter arrays."""
    arrays: Dict[str, np.ndarray] = {}
    decoder = model.decoder
    spec: Dict[str, Any] = {"decoder": {"kind": decoder.kind, "d": decoder.d, "D": decoder.D}}
    if isinstance(decoder, AffineDecoder):
        arrays["V"] = decoder.V
        arrays["b"] = decoder.b
    else:
        spec["decoder"]["widths"] = list(decoder.widths)
        arrays["center"] = decoder.center
        arrays["scale"] = np.array([decoder.scale])
        for name, array in decoder.parameters():
            arrays[name] = array
    spec["base"] = {"kind": model.base.kind, "K": model.base.K, "d": model.base.d}
    arrays["means"] = model.base.means
    arrays["variances"] = model.base.variances
    arrays["weights"] = model.base.weights
    spec["meta"] = model.meta
    return spec, arrays


def model_from_arrays(spec: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> PushforwardModel:
    try:
        dec = spec["decoder"]
        if dec["kind"] == "affine":
            decoder: Decoder = AffineDecoder(V=arrays["V"], b=arrays["b"])
        else:
            n_layers = len(dec["widths"]) + 1
            decoder = MlpAutoencoder(
                enc_W=[arrays[f"enc_W{i}"] for i in range(n_layers)],
                enc_b=[arrays[f"enc_b{i}"] for i in range(n_layers)],
                dec_W=[arrays[f"dec_W{i}"] for i in range(n_layers)],
                dec_b=[arrays[f"dec_b{i}"] for i in range(n_layers)],
                center=arrays["center"],
                scale=float(arrays["scale"][0]),
            )
        weights = arrays["weights"]
        # f32 blobs round the weights; renormalize only then
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            weights = weights / weights.sum()
        base = LatentDensity(
            kind=spec["base"]["kind"],
            means=arrays["means"],
            variances=arrays["variances"],
            weights=weights,
        )
    except KeyError as exc:
        raise IntegrityError(f"parameter file lacks entry {exc}") from exc
    return PushforwardModel(decoder=decoder, base=base, meta=dict(spec.get("meta", {})))


def save_model(model: PushforwardModel, path: str, dtype: str = "f64") -> None:
    """Write the parameter blob to ``path`` and its manifest to ``path + '.json'``."""
    spec, arrays = model_to_arrays(model)
    layout, payload = pack_arrays(arrays, dtype)
    write_blob(path, payload)
    write_json(path + ".json", {"model": spec, "layout": layout})


def load_model(path: str) -> PushforwardModel:
    try:
        manifest = read_json(path + ".json")
    except OSError as exc:
        raise ModelLoadError(f"cannot read model manifest {path}.json: {exc}") from exc
    arrays = unpack_arrays(manifest["layout"], read_blob(path))
    return model_from_arrays(manifest["model"], arrays)
