"""
Reproduction experiment command.

Run one of the canned desk-scale experiments and write its
``report.json`` (one record per acceptance criterion) and plot-ready
TSV files. A failing criterion makes the command fail with the
criterion named.
"""

from __future__ import annotations

from typing import Any, Dict, Optional

from uomkit.base_command import BaseCommand, CommandContext
from uomkit.experiments import EXPERIMENTS, REPORT_FILE, run_experiment


class ReproCommand(BaseCommand):
    """Run a reproduction experiment with its acceptance checks."""

    name = "repro"
    description = "Run a canned reproduction experiment and check its acceptance criteria"
    input_schema: Dict[str, Any] = {
        "type": "object",
        "properties": {
            "experiment": {
                "type": "string",
                "description": "Experiment to run",
                "enum": sorted(EXPERIMENTS),
                "positional": True,
            },
            "quick": {"type": "boolean", "description": "Smaller sample sizes for a fast smoke run", "default": False},
        },
        "required": ["experiment"],
    }

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        name = command_input["experiment"]
        context.display.show_stage(f"experiment {name}")
        report = run_experiment(
            name, context.out_dir, seed=context.config.seed, threads=context.config.threads, quick=command_input["quick"]
        )
        for filename in report.files + [REPORT_FILE]:
            context.record.add_artifact(context.path(filename), "report" if filename == REPORT_FILE else "plot data")
        context.display.show_criteria([c.to_dict() for c in report.criteria])
        if not report.passed:
            return {"success": False, "error": f"{name}: failed criteria: {', '.join(report.failing())}"}
        return {"success": True, "output": f"{name}: all {len(report.criteria)} criteria passed"}


def get_command() -> BaseCommand:
    return ReproCommand()
