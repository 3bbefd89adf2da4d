import json
import os

import numpy as np
import pytest

from uomkit.command_registry import DynamicCommandRegistry
from uomkit.data import load_dataset
from uomkit.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main


def _read(path) -> dict:
    with open(path) as f:
        return json.load(f)


@pytest.fixture
def dataset(tmp_path):
    """A labeled synthetic union written by ``synth`` (dims 1 and 3 in R^8)."""
    out = tmp_path / "data"
    code = main(
        ["synth", "--n", "200", "--dims", "1,3", "--D", "8", "--out", str(out), "--verbosity", "minimal", "--threads", "1"]
    )
    assert code == EXIT_OK
    return out


def test_every_command_is_registered():
    registry = DynamicCommandRegistry()
    registry.load_commands()
    assert sorted(registry.commands) == ["cluster", "estimate-id", "eval", "repro", "sample", "synth", "train", "weights"]


def test_synth_writes_dataset_and_truth(dataset):
    X = load_dataset(str(dataset / "data.csv"), labels_path=str(dataset / "labels.csv"))
    assert (X.n, X.D) == (400, 8)
    truth = _read(dataset / "truth.json")
    assert [c["dim"] for c in truth["components"]] == [1, 3]
    assert truth["min_distance"] >= 10.0


def test_estimate_id_writes_reports(run_cli, tmp_path, dataset):
    code = run_cli(
        "estimate-id", "--input", str(dataset / "data.csv"), "--labels", str(dataset / "labels.csv"), "--k", "5,10"
    )
    assert code == EXIT_OK
    out = tmp_path / "out"
    for name in ("id_report.json", "id_report.csv", "id_boxplot.tsv", "run.json"):
        assert (out / name).exists()
    report = _read(out / "id_report.json")
    assert report["k_list"] == [5, 10]
    low, high = (g["estimates"][1]["value"] for g in report["groups"])
    assert low < high


def test_run_json_echoes_configuration(run_cli, tmp_path, dataset):
    run_cli("estimate-id", "--input", str(dataset / "data.csv"), "--seed", "3")
    record = _read(tmp_path / "out" / "run.json")
    assert record["status"] == "success"
    assert record["config"]["seed"] == 3
    assert record["config"]["options"]["k"] == [3, 5, 10, 20]
    assert not os.path.isabs(record["config"]["options"]["input"])
    assert {"path": "id_report.json", "kind": "report"} in record["artifacts"]


def test_config_file_values_are_overridden_by_flags(run_cli, tmp_path, dataset):
    config = tmp_path / "config.yaml"
    config.write_text("k: 5,10\nseed: 4\n")
    code = run_cli("estimate-id", "--input", str(dataset / "data.csv"), "--config", str(config), "--seed", "6")
    assert code == EXIT_OK
    record = _read(tmp_path / "out" / "run.json")
    assert record["config"]["options"]["k"] == [5, 10]
    assert record["config"]["seed"] == 6


def test_cluster_recovers_components(run_cli, tmp_path, dataset):
    code = run_cli(
        "cluster", "--input", str(dataset / "data.csv"), "--labels", str(dataset / "labels.csv"), "--L", "2"
    )
    assert code == EXIT_OK
    report = _read(tmp_path / "out" / "cluster_report.json")
    assert report["sizes"] == [200, 200]
    assert report["agreement"] == 1.0
    assert (tmp_path / "out" / "dendrogram.csv").exists()


def test_train_sample_eval_pipeline(run_cli, tmp_path, dataset):
    code = run_cli(
        "train",
        "--input", str(dataset / "data.csv"),
        "--labels", str(dataset / "labels.csv"),
        "--k", "10",
        "--holdout", "0.25",
        out="trained",
    )
    assert code == EXIT_OK
    trained = tmp_path / "trained"
    report = _read(trained / "train_report.json")
    assert report["L"] == 2
    assert report["peak_resident"] == 1
    assert report["weights"] == pytest.approx([0.5, 0.5], abs=0.1)
    assert (trained / "model" / "manifest.json").exists()

    assert run_cli("sample", "--model", str(trained / "model"), "--m", "500", out="sampled") == EXIT_OK
    sampled = tmp_path / "sampled"
    sample_report = _read(sampled / "sample_report.json")
    assert sum(sample_report["counts"]) == 500
    assert sample_report["peak_resident"] == 1

    code = run_cli(
        "eval",
        "--samples", str(sampled / "samples.csv"),
        "--reference", str(trained / "test.csv"),
        "--train", str(trained / "train.csv"),
        out="scored",
    )
    assert code == EXIT_OK
    scored = _read(tmp_path / "scored" / "eval_report.json")
    assert scored["m"] == 500
    assert scored["mmd"]["value"] < 0.1
    assert scored["bridge"]["off_support_fraction"] < 0.2


def test_sampling_is_reproducible(run_cli, tmp_path, dataset):
    run_cli("train", "--input", str(dataset / "data.csv"), "--labels", str(dataset / "labels.csv"), "--dims", "1,3", out="t")
    bundle = str(tmp_path / "t" / "model")
    run_cli("sample", "--model", bundle, "--m", "50", "--seed", "2", out="a")
    run_cli("sample", "--model", bundle, "--m", "50", "--seed", "2", out="b")
    a = load_dataset(str(tmp_path / "a" / "samples.csv"))
    b = load_dataset(str(tmp_path / "b" / "samples.csv"))
    np.testing.assert_array_equal(a.values, b.values)


def test_invalid_cluster_count_is_a_usage_error(run_cli, dataset, capsys):
    assert run_cli("cluster", "--input", str(dataset / "data.csv"), "--L", "0") == EXIT_USAGE
    assert "--L must be >= 1" in capsys.readouterr().err


def test_missing_required_option(run_cli, capsys):
    assert run_cli("cluster") == EXIT_USAGE
    assert "--input is required" in capsys.readouterr().err


def test_unknown_flag_is_a_usage_error(run_cli):
    assert run_cli("synth", "--no-such-flag", "1") == EXIT_USAGE


def test_bad_int_list_is_a_usage_error(run_cli):
    assert run_cli("synth", "--dims", "2,x") == EXIT_USAGE


def test_missing_input_file_is_a_runtime_failure(run_cli, tmp_path):
    assert run_cli("estimate-id", "--input", str(tmp_path / "absent.csv")) == EXIT_FAILURE
    record = _read(tmp_path / "out" / "run.json")
    assert record["status"] == "failed"
    assert record["error"]


def test_cluster_count_above_n_is_a_runtime_failure(run_cli, tmp_path, dataset):
    assert run_cli("cluster", "--input", str(dataset / "data.csv"), "--L", "401") == EXIT_FAILURE
    assert "L must satisfy" in _read(tmp_path / "out" / "run.json")["error"]


def test_unclustered_train_defaults_to_mixture_base(run_cli, tmp_path, dataset):
    """One model over a multimodal union gets the GMM base; per-cluster fits keep the Gaussian."""
    code = run_cli("train", "--input", str(dataset / "data.csv"), "--clusters", "none", "--dims", "3", out="single")
    assert code == EXIT_OK
    options = _read(tmp_path / "single" / "run.json")["config"]["options"]
    assert options["base"] == "gmm"
    assert options["components"] == 10

    code = run_cli(
        "train", "--input", str(dataset / "data.csv"), "--labels", str(dataset / "labels.csv"), "--dims", "1,3", out="split"
    )
    assert code == EXIT_OK
    assert _read(tmp_path / "split" / "run.json")["config"]["options"]["base"] == "gaussian"


def test_explicit_base_wins_over_cluster_default(run_cli, tmp_path, dataset):
    code = run_cli(
        "train", "--input", str(dataset / "data.csv"), "--clusters", "none", "--dims", "3", "--base", "gaussian"
    )
    assert code == EXIT_OK
    assert _read(tmp_path / "out" / "run.json")["config"]["options"]["base"] == "gaussian"


@pytest.mark.parametrize("k, variant", [("1,5", "k-minus-1"), ("2,5", "k-minus-2")])
def test_too_small_k_is_a_usage_error(run_cli, dataset, capsys, k, variant):
    code = run_cli("estimate-id", "--input", str(dataset / "data.csv"), "--k", k, "--variant", variant)
    assert code == EXIT_USAGE
    assert "--k" in capsys.readouterr().err
