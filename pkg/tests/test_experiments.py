import json

import pytest

from uomkit.errors import ArgumentError
from uomkit.experiments import EXPERIMENTS, REPORT_FILE, ExperimentReport, run_experiment
from uomkit.main import EXIT_USAGE


def _criterion(report: ExperimentReport, prefix: str):
    return next(c for c in report.criteria if c.name.startswith(prefix))


def test_report_passes_only_when_every_criterion_does(tmp_path):
    report = ExperimentReport(name="toy", seed=0)
    report.check("first", True, 1, 1)
    assert report.passed
    report.check("second", False, 2, 1)
    assert not report.passed
    assert report.failing() == ["second"]
    saved = json.loads(open(report.save(str(tmp_path))).read())
    assert saved["passed"] is False
    assert [c["name"] for c in saved["criteria"]] == ["first", "second"]


def test_unknown_experiment(tmp_path):
    with pytest.raises(ArgumentError, match="unknown experiment"):
        run_experiment("nope", str(tmp_path))


def test_repro_rejects_unknown_experiment_on_the_command_line(run_cli):
    assert run_cli("repro", "nope") == EXIT_USAGE


def test_experiment_names():
    assert sorted(EXPERIMENTS) == ["prop1", "uom-verify", "varying-dims", "weighted-ce"]


@pytest.mark.slow
def test_weighted_ce_quick(tmp_path):
    """The exact checks of the weighted cross-entropy experiment hold."""
    report = run_experiment("weighted-ce", str(tmp_path), quick=True)
    for prefix in ("unit weights", "softmax gradient", "id weights", "pearson", "EM log-likelihood", "100-class trend"):
        assert _criterion(report, prefix).passed
    trend = report.results["trend_correlation"]
    assert trend["r"] < 0.0 and trend["p"] < 0.05
    assert (tmp_path / REPORT_FILE).exists()
    assert (tmp_path / "id_accuracy.tsv").exists()
    assert len(report.results["omega"]) == 4


@pytest.mark.slow
def test_prop1_quick(tmp_path):
    """Clustering removes the bridge between two far blobs; a mixture base alone does no better."""
    report = run_experiment("prop1", str(tmp_path), quick=True)
    for run in report.results["runs"]:
        assert run["clustered"]["bridge_mass"] < run["single"]["bridge_mass"]
        assert run["clustered"]["bridge_mass"] <= run["single_gmm"]["bridge_mass"]
        assert run["single_gmm"]["components"] >= 2
    assert _criterion(report, "peak resident").passed
    assert (tmp_path / "bridge.tsv").exists()


@pytest.mark.slow
def test_uom_verify_quick(tmp_path):
    report = run_experiment("uom-verify", str(tmp_path), quick=True)
    assert _criterion(report, "ward merges").passed
    assert _criterion(report, "ward recovers").passed
    for c in report.criteria:
        if c.name.startswith("variant identity"):
            assert c.passed
    assert (tmp_path / "per_group.tsv").exists()


@pytest.mark.slow
def test_varying_dims_reports_unclustered_baseline(tmp_path):
    report = run_experiment("varying-dims", str(tmp_path), quick=True)
    assert len(report.results["runs"]) == 4
    for run in report.results["runs"]:
        assert run["dims"]["single"] == [max(run["dims"]["auto"])]
        assert set(run["mmd2"]) == {"auto", "constant", "single"}
    header = (tmp_path / "varying_dims.tsv").read_text().splitlines()[0]
    assert "single_mmd2" in header.split("\t")
