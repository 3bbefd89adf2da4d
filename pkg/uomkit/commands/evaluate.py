"""
Sample evaluation command.

Compare generated samples with reference data: the unbiased MMD^2
against held-out points and the bridge mass (fraction of samples off
the training support). Without ``--mmd`` or ``--bridge`` both are
computed.
"""

from __future__ import annotations

from typing import Any, Dict, Optional, Union

from uomkit.base_command import BaseCommand, CommandContext
from uomkit.data import load_dataset
from uomkit.errors import ArgumentError
from uomkit.evaluation import MEDIAN, bridge_mass, mmd2_unbiased
from uomkit.state import write_json


def _number_or(value: Any, keyword: str, flag: str) -> Union[float, str]:
    if isinstance(value, str) and value.strip() == keyword:
        return keyword
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ArgumentError(f"{flag} must be {keyword!r} or a number, got {value!r}") from exc


class EvalCommand(BaseCommand):
    """Score samples by MMD^2 and bridge mass."""

    name = "eval"
    description = "Evaluate samples by MMD^2 to reference data and by bridge mass"
    input_schema: Dict[str, Any] = {
        "type": "object",
        "properties": {
            "samples": {"type": "path", "description": "Generated samples"},
            "reference": {"type": "path", "description": "Held-out reference data for MMD^2"},
            "train": {"type": "path", "description": "Training data for the bridge mass (defaults to --reference)"},
            "mmd": {"type": "boolean", "description": "Compute MMD^2", "default": False},
            "bridge": {"type": "boolean", "description": "Compute the bridge mass", "default": False},
            "bandwidth": {"type": "string", "description": "RBF bandwidth: median or a number", "default": MEDIAN},
            "tau": {"type": "string", "description": "Bridge threshold: auto or a number", "default": "auto"},
        },
        "required": ["samples"],
    }

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        threads = context.config.threads
        do_mmd, do_bridge = command_input["mmd"], command_input["bridge"]
        if not (do_mmd or do_bridge):
            do_mmd = do_bridge = True
        samples = load_dataset(command_input["samples"])
        report: Dict[str, Any] = {"m": samples.n, "mmd": None, "bridge": None}
        summary = []

        if do_mmd:
            if not command_input.get("reference"):
                raise ArgumentError("MMD^2 needs --reference")
            bandwidth = _number_or(command_input["bandwidth"], MEDIAN, "--bandwidth")
            reference = load_dataset(command_input["reference"])
            context.display.show_stage(f"MMD^2 of {samples.n} samples against {reference.n} reference points")
            result = mmd2_unbiased(samples, reference, bandwidth)
            report["mmd"] = result.to_dict()
            summary.append(f"MMD^2 {result.value:.6g}")

        if do_bridge:
            train_path = command_input.get("train") or command_input.get("reference")
            if not train_path:
                raise ArgumentError("bridge mass needs --train or --reference")
            tau = _number_or(command_input["tau"], "auto", "--tau")
            train = load_dataset(train_path)
            context.display.show_stage(f"bridge mass against {train.n} training points")
            bridge = bridge_mass(samples, train, tau, threads=threads)
            report["bridge"] = bridge.to_dict()
            summary.append(f"bridge mass {bridge.off_support_fraction:.6g} (tau {bridge.tau:.4g})")

        report_path = context.path("eval_report.json")
        write_json(report_path, report)
        context.artifact(report_path, "report")
        return {"success": True, "output": ", ".join(summary)}


def get_command() -> BaseCommand:
    return EvalCommand()
