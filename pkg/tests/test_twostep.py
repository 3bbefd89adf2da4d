import numpy as np
import pytest

from uomkit.config import GmmConfig, MlpConfig, TwoStepConfig
from uomkit.data import DataMatrix
from uomkit.errors import ArgumentError, ModelLoadError
from uomkit.experiments import central_differences, em_monotone_runs, relative_gradient_error
from uomkit.synth import gen_affine_manifold
from uomkit.twostep import (
    AffineDecoder,
    LatentDensity,
    PushforwardModel,
    fit_gaussian,
    fit_gmm,
    fit_mlp_ae,
    fit_pca,
    fit_two_step,
    init_mlp_autoencoder,
    load_model,
    mlp_loss_and_grads,
    sample,
    save_model,
)


def test_pca_reconstructs_points_on_the_subspace():
    """An affine manifold is reconstructed exactly at its own dimension."""
    X, _ = gen_affine_manifold(200, 3, 10, seed=0)
    decoder, codes, error = fit_pca(X, 3)
    assert error <= 1e-9
    assert codes.shape == (200, 3)
    np.testing.assert_allclose(decoder.V.T @ decoder.V, np.eye(3), atol=1e-12)


def test_pca_directions_are_signed():
    rng = np.random.default_rng(30)
    X = DataMatrix(rng.standard_normal((50, 6)))
    decoder, _, _ = fit_pca(X, 4)
    pivots = np.argmax(np.abs(decoder.V), axis=0)
    assert np.all(decoder.V[pivots, np.arange(4)] > 0)


def test_pca_rejects_bad_dimension():
    X = DataMatrix(np.eye(3))
    with pytest.raises(ArgumentError):
        fit_pca(X, 0)
    with pytest.raises(ArgumentError):
        fit_pca(X, 4)


def test_pca_error_shrinks_with_dimension():
    """More principal directions never reconstruct worse; all of them reconstruct exactly."""
    X = DataMatrix(np.random.default_rng(34).standard_normal((50, 6)))
    errors = [fit_pca(X, d)[2] for d in range(1, 7)]
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    assert errors[-1] <= 1e-9


@pytest.mark.parametrize("d", [1, 2, 4])
def test_pca_error_is_the_trailing_spectrum(d):
    """The per-entry error is the discarded covariance eigenvalue mass over D."""
    rng = np.random.default_rng(35)
    X = DataMatrix(rng.standard_normal((80, 5)) * np.array([3.0, 2.0, 1.5, 1.0, 0.5]))
    _, _, error = fit_pca(X, d)
    eigenvalues = np.linalg.eigh(np.cov(X.values, rowvar=False, bias=True))[0]
    assert error == pytest.approx(eigenvalues[: 5 - d].sum() / 5, rel=1e-9)


def test_linear_autoencoder_recovers_an_affine_subspace():
    rng = np.random.default_rng(33)
    A, _ = np.linalg.qr(rng.standard_normal((4, 2)))
    X = DataMatrix(rng.standard_normal((256, 2)) @ A.T + 3.0)
    _, error = fit_mlp_ae(X, 2, MlpConfig(widths=(), epochs=300, learning_rate=0.1, batch_size=32))
    assert error < 0.05 * X.values.var(axis=0).mean()


def test_mlp_gradients_match_central_differences():
    rng = np.random.default_rng(31)
    X = rng.standard_normal((10, 5))
    ae = init_mlp_autoencoder(5, 2, [4, 3], rng, center=X.mean(axis=0), scale=float(X.std()))
    _, analytic = mlp_loss_and_grads(ae, X)
    numeric = central_differences(lambda: mlp_loss_and_grads(ae, X)[0], dict(ae.parameters()))
    assert relative_gradient_error(analytic, numeric) <= 1e-6


def test_mlp_zero_epochs_keeps_initial_weights():
    """Without training the autoencoder is its seeded initialization."""
    X, _ = gen_affine_manifold(40, 2, 6, seed=1)
    ae, error = fit_mlp_ae(X, 2, MlpConfig(epochs=0, widths=(8,)))
    again, _ = fit_mlp_ae(X, 2, MlpConfig(epochs=0, widths=(8,)))
    assert ae.losses == []
    assert np.isfinite(error)
    for (_, a), (_, b) in zip(ae.parameters(), again.parameters()):
        np.testing.assert_array_equal(a, b)


def test_mlp_training_lowers_the_loss():
    X, _ = gen_affine_manifold(200, 2, 8, seed=2)
    ae, _ = fit_mlp_ae(X, 2, MlpConfig(epochs=40, widths=(16,), learning_rate=0.05, batch_size=32))
    assert len(ae.losses) == 40
    assert ae.losses[-1] < ae.losses[0]


def test_gaussian_fit_uses_biased_variance():
    """The codes {0, 2} give mean 1 and variance 1."""
    density = fit_gaussian(np.array([[0.0], [2.0]]))
    np.testing.assert_allclose(density.means, [[1.0]])
    np.testing.assert_allclose(density.variances, [[1.0]])


def test_single_component_mixture_matches_gaussian():
    density = fit_gmm(np.array([[0.0], [2.0]]), 1)
    np.testing.assert_allclose(density.means, [[1.0]])
    np.testing.assert_allclose(density.variances, [[1.0]])
    np.testing.assert_allclose(density.weights, [1.0])


def test_mixture_finds_two_blobs():
    rng = np.random.default_rng(32)
    Z = np.concatenate([rng.normal(0.0, 1.0, (200, 1)), rng.normal(100.0, 1.0, (200, 1))])
    density = fit_gmm(Z, 2, GmmConfig(seed=3))
    order = np.argsort(density.means[:, 0])
    np.testing.assert_allclose(density.means[order, 0], [0.0, 100.0], atol=0.3)
    np.testing.assert_allclose(density.weights, [0.5, 0.5])


def test_em_log_likelihood_never_drops():
    assert em_monotone_runs(seed=0, runs=5) == 5


def test_zero_variance_codes_are_floored():
    density = fit_gaussian(np.full((10, 2), 3.0), var_floor=1e-4)
    np.testing.assert_array_equal(density.variances, np.full((1, 2), 1e-4))


def test_latent_density_rejects_bad_weights():
    with pytest.raises(ArgumentError, match="sum to one"):
        LatentDensity(kind="gmm", means=np.zeros((2, 1)), variances=np.ones((2, 1)), weights=[0.3, 0.3])


def test_sampling_is_deterministic():
    X, _ = gen_affine_manifold(100, 2, 5, seed=4)
    model = fit_two_step(X, 2)
    a = sample(model, 50, seed=7)
    b = sample(model, 50, seed=7)
    c = sample(model, 50, seed=8)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    with pytest.raises(ArgumentError):
        sample(model, 0, seed=7)


def test_affine_samples_stay_on_the_subspace():
    """Samples of a PCA model lie in the span of the training data."""
    X, _ = gen_affine_manifold(100, 2, 5, seed=5)
    model = fit_two_step(X, 2)
    S = sample(model, 30, seed=0).values
    decoder = model.decoder
    residual = decoder.decode(decoder.encode(S)) - S
    assert np.abs(residual).max() <= 1e-9


def test_affine_sample_covariance_matches_the_model():
    """Samples of a Gaussian-base PCA model have covariance ``V diag(var) V^T``."""
    X, _ = gen_affine_manifold(500, 2, 5, seed=6)
    model = fit_two_step(X, 2, TwoStepConfig(base_kind="gaussian", decoder_kind="affine"))
    S = sample(model, 20000, seed=1).values
    V = model.decoder.V
    expected = V @ np.diag(model.base.variances[0]) @ V.T
    observed = np.cov(S, rowvar=False, bias=True)
    np.testing.assert_allclose(observed, expected, atol=0.05 * np.abs(expected).max())


def test_zero_variance_base_samples_the_decoded_mean():
    V, _ = np.linalg.qr(np.random.default_rng(36).standard_normal((4, 2)))
    decoder = AffineDecoder(V=V, b=np.array([1.0, -2.0, 0.5, 3.0]))
    mean = np.array([[0.7, -1.3]])
    base = LatentDensity(kind="gaussian", means=mean, variances=np.zeros((1, 2)), weights=[1.0])
    S = sample(PushforwardModel(decoder=decoder, base=base), 25, seed=2).values
    np.testing.assert_allclose(S, np.repeat(decoder.decode(mean), 25, axis=0), atol=1e-12)


def test_two_step_records_metadata():
    X, _ = gen_affine_manifold(120, 2, 6, seed=6)
    cfg = TwoStepConfig(base_kind="gmm", n_components=2, decoder_kind="mlp", mlp=MlpConfig(epochs=2, widths=(8,)))
    model = fit_two_step(X, 2, cfg, seed=1, d_hat=2.1)
    assert model.meta["d_hat"] == 2.1
    assert len(model.meta["losses"]) == 2
    assert model.base.K == 2
    assert "log_likelihood" in model.meta


@pytest.mark.parametrize("decoder_kind", ["affine", "mlp"])
def test_saved_model_samples_identically(tmp_path, decoder_kind):
    X, _ = gen_affine_manifold(80, 2, 6, seed=7)
    cfg = TwoStepConfig(decoder_kind=decoder_kind, mlp=MlpConfig(epochs=1, widths=(8,)))
    model = fit_two_step(X, 2, cfg)
    path = str(tmp_path / "model.params")
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_array_equal(sample(back, 20, seed=1).values, sample(model, 20, seed=1).values)


def test_load_missing_model(tmp_path):
    with pytest.raises(ModelLoadError):
        load_model(str(tmp_path / "absent.params"))
