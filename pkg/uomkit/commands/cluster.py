"""
Unsupervised clustering command.

Partition a dataset into ``L`` groups with Ward agglomerative
clustering or k-means++. The group file it writes is accepted by
``estimate-id --groups`` and ``train --groups``.
"""

from __future__ import annotations

from typing import Any, Dict, Optional

from uomkit.base_command import BaseCommand, CommandContext
from uomkit.cluster import kmeanspp, label_agreement, save_dendrogram, ward_agglomerative
from uomkit.config import DEFAULT_L
from uomkit.data import load_dataset, save_groups
from uomkit.state import write_json


class ClusterCommand(BaseCommand):
    """Cluster a dataset into ``L`` groups."""

    name = "cluster"
    description = "Partition a dataset into L clusters (Ward or k-means++)"
    input_schema: Dict[str, Any] = {
        "type": "object",
        "properties": {
            "input": {"type": "path", "description": "Dataset (CSV or raw with JSON sidecar)"},
            "L": {"type": "integer", "description": "Number of clusters", "minimum": 1, "default": DEFAULT_L},
            "method": {"type": "string", "description": "Clustering method", "enum": ["ward", "kmeans"], "default": "ward"},
            "labels": {"type": "path", "description": "Label CSV to report the adjusted Rand agreement against"},
        },
        "required": ["input"],
    }

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        X = load_dataset(command_input["input"], labels_path=command_input.get("labels"))
        L = command_input["L"]
        method = command_input["method"]
        context.display.show_stage(f"{method} clustering of {X.n} points into {L} groups")
        if method == "ward":
            g, merges = ward_agglomerative(X, L)
            path = context.path("dendrogram.csv")
            save_dendrogram(merges, path)
            context.artifact(path, "merge log")
        else:
            g = kmeanspp(X, L, context.config.seed, threads=context.config.threads)

        groups_path = context.path("groups.csv")
        save_groups(g, groups_path)
        context.artifact(groups_path, "groups")
        report: Dict[str, Any] = {"method": method, "L": g.L, "n": g.n, "sizes": g.sizes.tolist(), "agreement": None}
        if X.labels is not None:
            report["agreement"] = label_agreement(g.assignment, X.labels)
        report_path = context.path("cluster_report.json")
        write_json(report_path, report)
        context.artifact(report_path, "report")

        summary = f"{g.L} clusters, sizes {report['sizes']}"
        if report["agreement"] is not None:
            summary += f", adjusted Rand index {report['agreement']:.4f}"
        return {"success": True, "output": summary}


def get_command() -> BaseCommand:
    return ClusterCommand()
