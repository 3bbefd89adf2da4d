"""
Per-group intrinsic dimension estimation command.

Groups come from a group file, from the dataset labels, or (with
neither) the whole dataset is a single group. The pooled estimate is
always reported alongside.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from uomkit.base_command import BaseCommand, CommandContext
from uomkit.config import DEFAULT_K_LIST, VARIANTS, VARIANT_K_MINUS_1, VARIANT_K_MINUS_2
from uomkit.data import GroupIndex, load_dataset, load_groups
from uomkit.idest import INSUFFICIENT, per_group_id
from uomkit.knn import BACKENDS, dump_neighbor_table, knn_distances


class EstimateIdCommand(BaseCommand):
    """Estimate the intrinsic dimension of every group of a dataset."""

    name = "estimate-id"
    description = "Estimate per-group and pooled intrinsic dimensions across k"
    input_schema: Dict[str, Any] = {
        "type": "object",
        "properties": {
            "input": {"type": "path", "description": "Dataset (CSV or raw with JSON sidecar)"},
            "labels": {"type": "path", "description": "Single-column label CSV; labels define the groups"},
            "groups": {"type": "path", "description": "Single-column group CSV (overrides --labels for grouping)"},
            "k": {"type": "int_list", "description": "Neighbor counts", "minimum": 2, "default": list(DEFAULT_K_LIST)},
            "variant": {"type": "string", "description": "Estimator denominator", "enum": list(VARIANTS), "default": VARIANT_K_MINUS_1},
            "backend": {"type": "string", "description": "Neighbor search backend", "enum": list(BACKENDS), "default": "brute"},
            "keep_duplicates": {"type": "boolean", "description": "Fail on duplicate points instead of removing them", "default": False},
            "dump_neighbors": {"type": "boolean", "description": "Also write the pooled neighbor table", "default": False},
        },
        "required": ["input"],
    }

    def validate(self, options: Dict[str, Any]) -> List[str]:
        problems = super().validate(options)
        if options.get("variant") == VARIANT_K_MINUS_2 and any(k < 3 for k in options.get("k") or []):
            problems.append(f"--variant {VARIANT_K_MINUS_2} needs every --k >= 3, got {options['k']}")
        return problems

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        threads = context.config.threads
        X = load_dataset(command_input["input"], labels_path=command_input.get("labels"))
        if command_input.get("groups"):
            g = load_groups(command_input["groups"])
        elif X.labels is not None:
            g = GroupIndex.from_labels(X.labels)
        else:
            g = None
        dedup = not command_input["keep_duplicates"]
        k_list = command_input["k"]

        context.display.show_stage(f"estimating on {X.n} points, {1 if g is None else g.L} group(s)")
        report = per_group_id(X, g, k_list, command_input["variant"], dedup, command_input["backend"], threads)
        for filename, writer, kind in (
            ("id_report.json", report.to_json, "report"),
            ("id_report.csv", report.to_csv, "table"),
            ("id_boxplot.tsv", report.write_boxplot_tsv, "plot data"),
        ):
            path = context.path(filename)
            writer(path)
            context.artifact(path, kind)

        if command_input["dump_neighbors"]:
            table = knn_distances(X, max(k_list), dedup=dedup, backend=command_input["backend"], threads=threads)
            path = context.path("neighbors.csv")
            dump_neighbor_table(table, path)
            context.artifact(path, "neighbor table")

        rows = []
        for group in report.groups + [None]:
            estimates = report.pooled if group is None else group.estimates
            name = "pooled" if group is None else group.name
            size = X.n if group is None else group.size
            rows.append([name, size] + [INSUFFICIENT if estimates[k] is None else estimates[k].value for k in k_list])
        context.display.show_table(["group", "n"] + [f"k={k}" for k in k_list], rows)
        return {"success": True, "output": f"estimated {len(report.groups)} group(s) at k={k_list}"}


def get_command() -> BaseCommand:
    return EstimateIdCommand()
