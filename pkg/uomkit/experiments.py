"""Canned desk-scale reproduction experiments.

Each experiment runs a fixed scenario with seeds derived from one root
seed, checks its acceptance criteria, and writes ``report.json`` plus
plot-ready TSV files into an output directory:

* ``uom-verify`` -- estimator accuracy on embedded hypercubes, the
  variant identity, per-group estimates on a two-component union and
  the Ward clustering oracles.
* ``prop1`` -- single full-dimensional models with a Gaussian or a
  mixture base versus a clustered model on two far-apart blobs (bridge
  mass and MMD), and the multinomial split of clustered sampling.
* ``varying-dims`` -- clustered models with per-cluster estimated
  dims versus one pooled dim and versus one unclustered mixture-base
  model at the largest estimate, for a large and a small dimension gap.
* ``weighted-ce`` -- dimension-weighted versus standard cross entropy,
  gradient checks and the correlation statistics.

Reports hold no timestamps or absolute paths, so reruns with the same
seed produce byte-identical files whatever the thread count.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from .cluster import label_agreement, ward_agglomerative
from .clustered import ClusteredModel, load_bundle, sample_clustered, train_clustered
from .config import ClusteredConfig, GmmConfig, SoftmaxConfig, TwoStepConfig, VARIANT_K_MINUS_1, VARIANT_K_MINUS_2
from .data import DataMatrix, GroupIndex, split_train_test
from .errors import ArgumentError
from .evaluation import (
    bridge_mass,
    id_accuracy_report,
    mmd2_unbiased,
    multinomial_chi2,
    pearson_r_and_pvalue,
    write_plot_tsv,
)
from .idest import mle_id, per_group_id
from .knn import knn_distances
from .rng import derive_seed, make_rng
from .state import write_json
from .synth import compose_union, gen_affine_manifold, gen_pushforward_manifold
from .twostep import fit_gmm, fit_two_step, sample
from .weights import (
    ClassWeights,
    id_weights,
    per_class_accuracy,
    train_softmax_weighted,
    weighted_cross_entropy,
)

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"


@dataclass
class Criterion:
    """One acceptance check."""

    name: str
    passed: bool
    value: Any
    threshold: Any

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": bool(self.passed), "value": self.value, "threshold": self.threshold}


@dataclass
class ExperimentReport:
    """Criteria, numeric results and written files of one experiment run."""

    name: str
    seed: int
    criteria: List[Criterion] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def failing(self) -> List[str]:
        return [c.name for c in self.criteria if not c.passed]

    def check(self, name: str, passed: bool, value: Any, threshold: Any) -> None:
        self.criteria.append(Criterion(name=name, passed=bool(passed), value=value, threshold=threshold))
        logger.info("%s %s: %r", "pass" if passed else "FAIL", name, value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.name,
            "seed": self.seed,
            "passed": self.passed,
            "criteria": [c.to_dict() for c in self.criteria],
            "results": self.results,
            "files": list(self.files),
        }

    def save(self, out_dir: str) -> str:
        path = os.path.join(out_dir, REPORT_FILE)
        write_json(path, self.to_dict())
        return path


def write_tsv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(header) + "\n")
        for row in rows:
            f.write("\t".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def naive_ward_merges(values: np.ndarray, L: int) -> List[Tuple[int, int, float]]:
    """Ward merges recomputed from raw points at every step.

    Same tie rule as :func:`ward_agglomerative`. Cubic cost; used as an
    oracle on small inputs.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    members: Dict[int, List[int]] = {i: [i] for i in range(n)}
    next_id = n
    merges: List[Tuple[int, int, float]] = []
    while len(members) > L:
        ids = sorted(members)
        best: Optional[Tuple[float, int, int]] = None
        for a_pos, a in enumerate(ids):
            mu_a = values[members[a]].mean(axis=0)
            n_a = len(members[a])
            for b in ids[a_pos + 1 :]:
                mu_b = values[members[b]].mean(axis=0)
                n_b = len(members[b])
                diff = mu_a - mu_b
                cost = n_a * n_b / (n_a + n_b) * float(diff @ diff)
                if best is None or (cost, a, b) < best:
                    best = (cost, a, b)
        assert best is not None
        cost, a, b = best
        members[next_id] = members.pop(a) + members.pop(b)
        merges.append((a, b, cost))
        next_id += 1
    return merges


def relative_gradient_error(analytic: Dict[str, np.ndarray], numeric: Dict[str, np.ndarray]) -> float:
    """Largest per-array relative error ``|a - n| / max(|a|, |n|)`` (Frobenius norms)."""
    worst = 0.0
    for name, a in analytic.items():
        num = numeric[name]
        scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(num)), 1e-12)
        worst = max(worst, float(np.linalg.norm(a - num)) / scale)
    return worst


def central_differences(
    loss: Callable[[], float], arrays: Dict[str, np.ndarray], eps: float = 1e-5
) -> Dict[str, np.ndarray]:
    """Central-difference gradient of ``loss`` with respect to every entry of ``arrays`` (mutated in place)."""
    out: Dict[str, np.ndarray] = {}
    for name, array in arrays.items():
        grad = np.zeros_like(array)
        flat, gflat = array.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            up = loss()
            flat[i] = keep - eps
            down = loss()
            flat[i] = keep
            gflat[i] = (up - down) / (2.0 * eps)
        out[name] = grad
    return out


# -----------------------------------------------------------------------------
# uom-verify
# -----------------------------------------------------------------------------

ESTIMATOR_CASES = ((1, 0.15), (2, 0.15), (5, 0.15), (10, 0.30))


def run_uom_verify(out_dir: str, seed: int = 0, threads: int = 1, quick: bool = False) -> ExperimentReport:
    report = ExperimentReport(name="uom-verify", seed=seed)
    n_cube, n_component, k = (2000, 1000, 20) if quick else (10000, 5000, 20)

    rows = []
    for d, tolerance in ESTIMATOR_CASES:
        X, _ = gen_affine_manifold(n_cube, d, 64, derive_seed(seed, 100 + d))
        table = knn_distances(X, k, threads=threads)
        e1 = mle_id(table, k, VARIANT_K_MINUS_1)
        e2 = mle_id(table, k, VARIANT_K_MINUS_2)
        error = abs(e1.value - d) / d
        identity = abs(e2.value - e1.value * (k - 2) / (k - 1)) / e2.value
        rows.append((d, e1.value, e2.value, error))
        report.check(f"estimate d={d} within {tolerance:.0%}", error <= tolerance, error, tolerance)
        report.check(f"variant identity d={d}", identity <= 1e-12, identity, 1e-12)
    write_tsv(os.path.join(out_dir, "estimator.tsv"), ["d", "estimate", "estimate_k_minus_2", "relative_error"], rows)
    report.files.append("estimator.tsv")

    k_list = [3, 5, 10, 20]
    low = gen_affine_manifold(n_component, 2, 64, derive_seed(seed, 1))
    high = gen_affine_manifold(n_component, 8, 64, derive_seed(seed, 2))
    union, truth = compose_union([low, high], gap=10.0, seed=seed)
    id_report = per_group_id(union, GroupIndex.from_labels(union.labels), k_list, threads=threads)
    for k_value in k_list:
        d_low, d_high = id_report.values_for_k(k_value)
        pooled = id_report.pooled[k_value].value
        report.check(f"spread at k={k_value}", d_high - d_low >= 3.0, d_high - d_low, 3.0)
        report.check(
            f"pooled between groups at k={k_value}",
            min(d_low, d_high) < pooled < max(d_low, d_high),
            pooled,
            [d_low, d_high],
        )
    id_report.write_boxplot_tsv(os.path.join(out_dir, "per_group.tsv"))
    report.files.append("per_group.tsv")
    report.results["per_group"] = id_report.to_dict()
    report.results["min_distance"] = truth.min_distance

    rng = make_rng(seed, stream=3)
    mismatches = 0
    for _ in range(10 if quick else 50):
        n = int(rng.integers(5, 51))
        L = int(rng.integers(1, n))
        values = rng.standard_normal((n, 3))
        _, merges = ward_agglomerative(DataMatrix(values), L)
        fast = [(m.left_id, m.right_id) for m in merges]
        slow = [(a, b) for a, b, _ in naive_ward_merges(values, L)]
        mismatches += int(fast != slow)
    report.check("ward merges equal naive recomputation", mismatches == 0, mismatches, 0)

    a = gen_affine_manifold(100, 2, 8, derive_seed(seed, 4))
    b = gen_affine_manifold(100, 2, 8, derive_seed(seed, 5))
    diameter = max(float(pdist(a[0].values).max()), float(pdist(b[0].values).max()))
    blobs, _ = compose_union([a, b], gap=20.0 * diameter, seed=seed)
    groups, _ = ward_agglomerative(blobs, 2)
    agreement = label_agreement(groups.assignment, blobs.labels)
    report.check("ward recovers separated blobs", agreement == 1.0, agreement, 1.0)
    return report


# -----------------------------------------------------------------------------
# prop1
# -----------------------------------------------------------------------------

PROP1_MIXTURE_COMPONENTS = 4


def _two_blobs(seed: int, n: int, D: int, separation: float) -> Tuple[DataMatrix, DataMatrix]:
    rng = make_rng(seed)
    direction = rng.standard_normal(D)
    direction /= np.linalg.norm(direction)
    centers = (-0.5 * separation * direction, 0.5 * separation * direction)

    def draw(count: int) -> DataMatrix:
        values = np.concatenate([c + rng.standard_normal((count, D)) for c in centers])
        return DataMatrix(values, np.repeat(np.arange(2), count))

    return draw(n), draw(n // 2)


def run_prop1(out_dir: str, seed: int = 0, threads: int = 1, quick: bool = False) -> ExperimentReport:
    report = ExperimentReport(name="prop1", seed=seed)
    D, n, m = 16, (500 if quick else 2000), (500 if quick else 2000)
    gaussian = TwoStepConfig(base_kind="gaussian", decoder_kind="affine")
    mixture = TwoStepConfig(base_kind="gmm", n_components=PROP1_MIXTURE_COMPONENTS, decoder_kind="affine")
    rows, runs = [], []
    for i in range(3):
        run_seed = derive_seed(seed, i)
        train, holdout = _two_blobs(run_seed, n, D, separation=50.0)
        single = fit_two_step(train, D, gaussian, seed=run_seed)
        single_samples = sample(single, m, derive_seed(run_seed, 1))
        single_gmm = fit_two_step(train, D, mixture, seed=run_seed)
        gmm_samples = sample(single_gmm, m, derive_seed(run_seed, 3))
        clustered = train_clustered(
            train,
            GroupIndex.from_labels(train.labels),
            dims=[D, D],
            cfg=ClusteredConfig(two_step=gaussian, seed=run_seed, threads=threads),
        )
        clustered_samples = sample_clustered(clustered, m, derive_seed(run_seed, 2))
        single_bridge = bridge_mass(single_samples, train, threads=threads)
        tau = single_bridge.tau
        gmm_mass = bridge_mass(gmm_samples, train, tau=tau, threads=threads).off_support_fraction
        clustered_mass = bridge_mass(clustered_samples, train, tau=tau, threads=threads).off_support_fraction
        single_mass = single_bridge.off_support_fraction
        single_mmd = mmd2_unbiased(single_samples, holdout).value
        gmm_mmd = mmd2_unbiased(gmm_samples, holdout).value
        clustered_mmd = mmd2_unbiased(clustered_samples, holdout).value
        report.check(f"single bridge mass (run {i})", single_mass >= 0.05, single_mass, 0.05)
        report.check(f"clustered bridge mass (run {i})", clustered_mass <= 0.005, clustered_mass, 0.005)
        report.check(
            f"clustered bridge mass at most the mixture-base single model's (run {i})",
            clustered_mass <= gmm_mass,
            clustered_mass,
            gmm_mass,
        )
        report.check(
            f"clustered mmd at most half of single (run {i})",
            clustered_mmd <= 0.5 * single_mmd,
            clustered_mmd,
            0.5 * single_mmd,
        )
        rows.append((i, single_mass, gmm_mass, clustered_mass, single_mmd, gmm_mmd, clustered_mmd, tau))
        runs.append(
            {
                "tau": tau,
                "single": {"bridge_mass": single_mass, "mmd2": single_mmd},
                "single_gmm": {"bridge_mass": gmm_mass, "mmd2": gmm_mmd, "components": PROP1_MIXTURE_COMPONENTS},
                "clustered": {"bridge_mass": clustered_mass, "mmd2": clustered_mmd},
            }
        )
    write_tsv(
        os.path.join(out_dir, "bridge.tsv"),
        [
            "run",
            "single_bridge",
            "single_gmm_bridge",
            "clustered_bridge",
            "single_mmd2",
            "single_gmm_mmd2",
            "clustered_mmd2",
            "tau",
        ],
        rows,
    )
    report.files.append("bridge.tsv")
    report.results["runs"] = runs
    report.results["multinomial"] = _multinomial_check(report, out_dir, seed, quick)
    return report


def _multinomial_check(report: ExperimentReport, out_dir: str, seed: int, quick: bool) -> Dict[str, Any]:
    """Sample a bundle with cluster sizes 2 and 3 and test the split counts."""
    values = np.array([[0.0, 0.0], [1.0, 0.5], [10.0, 10.0], [11.0, 10.5], [12.0, 11.5]])
    X = DataMatrix(values, np.array([0, 0, 1, 1, 1]))
    bundle_dir = os.path.join(out_dir, "multinomial_bundle")
    trained = train_clustered(
        X, GroupIndex.from_labels(X.labels), dims=[1, 1], cfg=ClusteredConfig(seed=seed), bundle_dir=bundle_dir
    )
    report.files.append("multinomial_bundle/manifest.json")
    model: ClusteredModel = load_bundle(bundle_dir)
    m = 10000 if quick else 100000
    statistics, passed = [], 0
    for i in range(20):
        labels = sample_clustered(model, m, derive_seed(seed, 1000 + i)).labels
        result = multinomial_chi2(np.bincount(labels, minlength=2), model.weights)
        statistics.append(result.statistic)
        passed += int(result.passed)
    report.check("chi-square below the 1-1e-6 quantile", passed >= 19, passed, 19)
    peak = max(trained.tracker.peak, model.tracker.peak)
    report.check("peak resident models", peak <= 1, peak, 1)
    return {"weights": model.weights.tolist(), "statistics": statistics, "passed_seeds": passed}


# -----------------------------------------------------------------------------
# varying-dims
# -----------------------------------------------------------------------------

DIM_PAIRS = ((20, 2), (20, 12))


def run_varying_dims(out_dir: str, seed: int = 0, threads: int = 1, quick: bool = False) -> ExperimentReport:
    report = ExperimentReport(name="varying-dims", seed=seed)
    n, d_latent, D = (1200 if quick else 4000), 24, 64
    two_step = TwoStepConfig(base_kind="gaussian", decoder_kind="affine")
    baseline = TwoStepConfig(base_kind="gmm", n_components=10, decoder_kind="affine")
    rows, gaps, runs = [], {}, []
    for high, low in DIM_PAIRS:
        gaps[(high, low)] = []
        for i in range(2):
            run_seed = derive_seed(seed, 10 * high + low + i)
            a, ta = gen_pushforward_manifold(n, d_latent, high, D, derive_seed(run_seed, 1))
            b, tb = gen_pushforward_manifold(n, d_latent, low, D, derive_seed(run_seed, 2))
            union, _ = compose_union([(a, ta), (b, tb)], gap=10.0, seed=run_seed)
            train, test = split_train_test(union, 0.25, run_seed)
            groups = GroupIndex.from_labels(train.labels)
            cfg = ClusteredConfig(two_step=two_step, k=20, seed=run_seed, threads=threads)
            scores, dims = {}, {}
            for mode in ("auto", "constant"):
                model = train_clustered(train, groups, dims=mode, cfg=cfg)
                samples = sample_clustered(model, test.n, derive_seed(run_seed, 3))
                scores[mode] = mmd2_unbiased(samples, test).value
                dims[mode] = model.dims
            single_dim = max(dims["auto"])
            single = fit_two_step(train, single_dim, baseline, seed=derive_seed(run_seed, 4))
            scores["single"] = mmd2_unbiased(sample(single, test.n, derive_seed(run_seed, 5)), test).value
            dims["single"] = [single_dim]
            gap = scores["constant"] - scores["auto"]
            gaps[(high, low)].append(gap)
            if (high, low) == DIM_PAIRS[0]:
                report.check(
                    f"auto dims beat constant dims (dims {high}/{low}, run {i})",
                    scores["auto"] <= scores["constant"],
                    scores["auto"],
                    scores["constant"],
                )
            rows.append((high, low, i, scores["auto"], scores["constant"], scores["single"], gap))
            runs.append({"true_dims": [high, low], "run": i, "dims": dims, "mmd2": scores})
    wide = float(np.mean(gaps[DIM_PAIRS[0]]))
    narrow = float(np.mean(gaps[DIM_PAIRS[1]]))
    report.check("gap tightens with smaller dimension difference", narrow <= wide, narrow, wide)
    write_tsv(
        os.path.join(out_dir, "varying_dims.tsv"),
        ["high", "low", "run", "auto_mmd2", "constant_mmd2", "single_mmd2", "gap"],
        rows,
    )
    report.files.append("varying_dims.tsv")
    report.results["runs"] = runs
    report.results["mean_gap"] = {f"{h}/{lo}": float(np.mean(v)) for (h, lo), v in gaps.items()}
    return report


# -----------------------------------------------------------------------------
# weighted-ce
# -----------------------------------------------------------------------------

CLASS_DIMS = (2, 4, 8, 16)


def _overlapping_classes(seed: int, n: int, D: int) -> DataMatrix:
    rng = make_rng(seed)
    blocks, labels = [], []
    for c, d in enumerate(CLASS_DIMS):
        X, _ = gen_affine_manifold(n, d, D, derive_seed(seed, c + 1), noise_sigma=0.05)
        values = X.values - X.values.mean(axis=0)
        shift = rng.standard_normal(D)
        blocks.append(values + 0.5 * shift / np.linalg.norm(shift))
        labels.append(np.full(n, c))
    return DataMatrix(np.concatenate(blocks), np.concatenate(labels))


def softmax_gradient_error(seed: int) -> float:
    """Relative error of the weighted cross-entropy gradient on a 3-class, 20-point toy problem."""
    rng = make_rng(seed)
    X = rng.standard_normal((20, 4))
    y = rng.integers(0, 3, 20)
    omega = id_weights(rng.uniform(1.0, 10.0, 3)).omega
    params = {"W": rng.standard_normal((4, 3)), "b": rng.standard_normal(3)}
    _, analytic = weighted_cross_entropy(params["W"], params["b"], X, y, omega)
    numeric = central_differences(lambda: weighted_cross_entropy(params["W"], params["b"], X, y, omega)[0], params)
    return relative_gradient_error(analytic, numeric)


def many_class_trend(seed: int, n_classes: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """Per-class (estimate, accuracy) pairs where accuracy falls as the estimate grows, plus noise."""
    rng = make_rng(seed)
    d_hats = rng.uniform(10.0, 40.0, n_classes)
    accuracies = np.clip(0.8 - 0.005 * d_hats + rng.normal(0.0, 0.05, n_classes), 0.0, 1.0)
    return d_hats, accuracies


def em_monotone_runs(seed: int, runs: int = 100) -> int:
    """Number of seeded EM fits whose log-likelihood trace never drops by more than 1e-9."""
    good = 0
    for i in range(runs):
        rng = make_rng(seed, stream=i)
        Z = np.concatenate([rng.normal(c, 1.0, (60, 2)) for c in (-4.0, 0.0, 5.0)])
        trace = fit_gmm(Z, 3, GmmConfig(seed=i, max_iter=100)).trace
        good += int(all(b - a >= -1e-9 for a, b in zip(trace, trace[1:])))
    return good


def run_weighted_ce(out_dir: str, seed: int = 0, threads: int = 1, quick: bool = False) -> ExperimentReport:
    report = ExperimentReport(name="weighted-ce", seed=seed)
    data = _overlapping_classes(derive_seed(seed, 0), 300 if quick else 600, 32)
    train, test = split_train_test(data, 0.3, seed)
    id_report = per_group_id(train, GroupIndex.from_labels(train.labels), [10], threads=threads)
    d_hats = id_report.values_for_k(10)
    weights = id_weights(d_hats)
    cfg = SoftmaxConfig(learning_rate=0.1, epochs=20 if quick else 50, batch_size=64, seed=seed)
    L = len(CLASS_DIMS)
    standard = train_softmax_weighted(train.values, train.labels, None, cfg, n_classes=L)
    weighted = train_softmax_weighted(train.values, train.labels, weights, cfg)
    ones = train_softmax_weighted(train.values, train.labels, ClassWeights(np.ones(L), np.ones(L)), cfg)
    acc_standard = per_class_accuracy(standard, test.values, test.labels, L)
    acc_weighted = per_class_accuracy(weighted, test.values, test.labels, L)

    drift = float(np.max(np.abs(np.asarray(ones.losses) - np.asarray(standard.losses)))) if standard.losses else 0.0
    report.check("unit weights reproduce standard cross entropy", drift <= 1e-10, drift, 1e-10)
    grad_error = softmax_gradient_error(derive_seed(seed, 7))
    report.check("softmax gradient matches central differences", grad_error <= 1e-4, grad_error, 1e-4)
    example = id_weights([3.0, 5.0]).omega.tolist()
    report.check("id weights of [3, 5]", example == [0.75, 1.25], example, [0.75, 1.25])
    r, p = pearson_r_and_pvalue([1, 2, 3], [1, 3, 2])
    stat_error = max(abs(r - 0.5), abs(p - 2.0 / 3.0))
    report.check("pearson on [1,2,3] / [1,3,2]", stat_error <= 1e-9, [r, p], [0.5, 2.0 / 3.0])
    monotone = em_monotone_runs(derive_seed(seed, 8), 20 if quick else 100)
    total = 20 if quick else 100
    report.check("EM log-likelihood non-decreasing", monotone == total, monotone, total)

    trend = id_accuracy_report(*many_class_trend(derive_seed(seed, 9)))
    report.check(
        "100-class trend gives r < 0 with p < 0.05",
        trend["r"] < 0.0 and trend["p"] < 0.05,
        [trend["r"], trend["p"]],
        [0.0, 0.05],
    )

    correlation = id_accuracy_report(d_hats, acc_standard.tolist())
    write_plot_tsv(
        os.path.join(out_dir, "id_accuracy.tsv"),
        [pt["x"] for pt in correlation["points"]],
        [pt["y"] for pt in correlation["points"]],
        [pt["fit"] for pt in correlation["points"]],
    )
    report.files.append("id_accuracy.tsv")
    write_tsv(
        os.path.join(out_dir, "weights.tsv"),
        ["class", "true_dim", "d_hat", "omega", "standard_accuracy", "weighted_accuracy"],
        [
            (c, CLASS_DIMS[c], d_hats[c], float(weights.omega[c]), float(acc_standard[c]), float(acc_weighted[c]))
            for c in range(L)
        ],
    )
    report.files.append("weights.tsv")
    report.results.update(
        {
            "d_hats": d_hats,
            "omega": weights.omega.tolist(),
            "standard_accuracy": acc_standard.tolist(),
            "weighted_accuracy": acc_weighted.tolist(),
            "mean_accuracy": {"standard": float(acc_standard.mean()), "weighted": float(acc_weighted.mean())},
            "correlation": {key: correlation[key] for key in ("r", "p", "slope", "intercept", "n")},
            "trend_correlation": {key: trend[key] for key in ("r", "p", "slope", "intercept", "n")},
            "gradient_error": grad_error,
        }
    )
    return report


EXPERIMENTS: Dict[str, Callable[..., ExperimentReport]] = {
    "uom-verify": run_uom_verify,
    "prop1": run_prop1,
    "varying-dims": run_varying_dims,
    "weighted-ce": run_weighted_ce,
}


def run_experiment(name: str, out_dir: str, seed: int = 0, threads: int = 1, quick: bool = False) -> ExperimentReport:
    """Run experiment ``name``, write its report and return it."""
    if name not in EXPERIMENTS:
        raise ArgumentError(f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")
    os.makedirs(out_dir, exist_ok=True)
    report = EXPERIMENTS[name](out_dir, seed=seed, threads=threads, quick=quick)
    report.save(out_dir)
    return report
