"""
Sampling command.

Draw ``m`` points from a model bundle written by ``train``. Cluster
counts follow the multinomial of the bundle weights; cluster models are
loaded one at a time and only when they have draws.
"""

from __future__ import annotations

from typing import Any, Dict, Optional

import numpy as np

from uomkit.base_command import BaseCommand, CommandContext
from uomkit.clustered import load_bundle, sample_clustered
from uomkit.data import save_dataset
from uomkit.state import write_json


class SampleCommand(BaseCommand):
    """Sample from a clustered model bundle."""

    name = "sample"
    description = "Draw samples from a trained model bundle"
    input_schema: Dict[str, Any] = {
        "type": "object",
        "properties": {
            "model": {"type": "path", "description": "Bundle directory written by train"},
            "m": {"type": "integer", "description": "Number of samples", "minimum": 1, "default": 10000},
            "format": {"type": "string", "description": "Sample file format", "enum": ["csv", "raw"], "default": "csv"},
        },
        "required": ["model"],
    }

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        model = load_bundle(command_input["model"])
        m = command_input["m"]
        context.display.show_stage(f"sampling {m} points from {model.L} cluster(s)")
        samples = sample_clustered(model, m, context.config.seed)

        fmt = command_input["format"]
        data_path = context.path("samples.csv" if fmt == "csv" else "samples.raw")
        labels_path = context.path("sample_labels.csv")
        save_dataset(samples, data_path, fmt, labels_path=labels_path)
        context.artifact(data_path, "samples")
        context.artifact(labels_path, "labels")

        counts = np.bincount(samples.labels, minlength=model.L).tolist()
        report = {"m": m, "L": model.L, "counts": counts, "weights": model.weights.tolist(), "peak_resident": model.tracker.peak}
        report_path = context.path("sample_report.json")
        write_json(report_path, report)
        context.artifact(report_path, "report")
        return {"success": True, "output": f"drew {m} samples, cluster counts {counts}"}


def get_command() -> BaseCommand:
    return SampleCommand()
