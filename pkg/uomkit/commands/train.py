"""
Clustered pushforward model training command.

Obtain clusters (from labels, a group file, Ward, k-means++ or a single
cluster for the unclustered baseline), resolve one latent dimension per
cluster and fit a two-step model on every cluster. The result is a
bundle directory ``model/`` that ``sample`` reads. With a positive
``--holdout`` the data is split first; ``train.csv`` and ``test.csv``
are written so that ``eval`` can compare against held-out points.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Union

import numpy as np

from uomkit.base_command import BaseCommand, CommandContext
from uomkit.cluster import kmeanspp, ward_agglomerative
from uomkit.clustered import DIMS_AUTO, DIMS_CONSTANT, save_bundle, train_clustered
from uomkit.config import (
    DEFAULT_L,
    VARIANTS,
    VARIANT_K_MINUS_1,
    ClusteredConfig,
    MlpConfig,
    TwoStepConfig,
    parse_int_list,
)
from uomkit.data import DataMatrix, GroupIndex, load_dataset, load_groups, save_dataset, save_groups, split_train_test
from uomkit.errors import ArgumentError
from uomkit.state import write_json

BUNDLE_DIR = "model"
CLUSTER_SOURCES = ["labels", "groups", "ward", "kmeans", "none"]


def parse_dims(value: Union[str, int, List[int]]) -> Union[str, List[int]]:
    """``auto``, ``constant`` or a comma-separated list of latent dims."""
    if isinstance(value, str) and value.strip() in (DIMS_AUTO, DIMS_CONSTANT):
        return value.strip()
    dims = parse_int_list([value] if isinstance(value, int) else value)
    if not dims or any(d < 1 for d in dims):
        raise ArgumentError(f"--dims must be auto, constant or positive integers, got {value!r}")
    return dims


def _clusters(source: str, X: DataMatrix, command_input: Dict[str, Any], context: CommandContext) -> GroupIndex:
    if source == "labels":
        if X.labels is None:
            raise ArgumentError("--clusters labels needs --labels")
        return GroupIndex.from_labels(X.labels)
    if source == "groups":
        if not command_input.get("groups"):
            raise ArgumentError("--clusters groups needs --groups")
        g = load_groups(command_input["groups"])
        if g.n != X.n:
            raise ArgumentError(f"group file has {g.n} rows but the training data has {X.n}")
        return g
    if source == "ward":
        return ward_agglomerative(X, command_input["L"])[0]
    if source == "kmeans":
        return kmeanspp(X, command_input["L"], context.config.seed, threads=context.config.threads)
    return GroupIndex.from_assignment(np.zeros(X.n, dtype=np.int64), L=1)


class TrainCommand(BaseCommand):
    """Fit a clustered pushforward model and write its bundle."""

    name = "train"
    description = "Train a clustered two-step pushforward model"
    input_schema: Dict[str, Any] = {
        "type": "object",
        "properties": {
            "input": {"type": "path", "description": "Training dataset (CSV or raw with JSON sidecar)"},
            "labels": {"type": "path", "description": "Single-column label CSV"},
            "groups": {"type": "path", "description": "Single-column group CSV (with --clusters groups)"},
            "clusters": {"type": "string", "description": "Source of the clusters", "enum": CLUSTER_SOURCES, "default": "labels"},
            "L": {"type": "integer", "description": "Cluster count for ward/kmeans", "minimum": 1, "default": DEFAULT_L},
            "dims": {"type": "string", "description": "auto, constant or comma-separated latent dims", "default": DIMS_AUTO},
            "k": {"type": "integer", "description": "Neighbor count of the dimension estimate", "minimum": 2, "default": 20},
            "variant": {"type": "string", "description": "Estimator denominator", "enum": list(VARIANTS), "default": VARIANT_K_MINUS_1},
            "base": {"type": "string", "description": "Latent density (default: gmm with --clusters none, else gaussian)", "enum": ["gaussian", "gmm"]},
            "components": {"type": "integer", "description": "Mixture components of the gmm base", "minimum": 1, "default": 10},
            "decoder": {"type": "string", "description": "First step", "enum": ["affine", "mlp"], "default": "affine"},
            "widths": {"type": "int_list", "description": "Hidden widths of the mlp autoencoder", "minimum": 1, "default": [64]},
            "epochs": {"type": "integer", "description": "Autoencoder epochs", "minimum": 0, "default": 100},
            "learning_rate": {"type": "number", "description": "Autoencoder step size", "default": 0.01},
            "batch_size": {"type": "integer", "description": "Autoencoder mini-batch size", "minimum": 1, "default": 64},
            "clip_norm": {"type": "number", "description": "Gradient-norm clip of the autoencoder"},
            "holdout": {"type": "number", "description": "Fraction held out as test.csv (0 keeps all)", "minimum": 0, "default": 0.0},
            "parallel": {"type": "boolean", "description": "Fit clusters concurrently", "default": False},
            "dtype": {"type": "string", "description": "Parameter blob precision", "enum": ["f64", "f32"], "default": "f64"},
        },
        "required": ["input"],
    }

    def resolve(self, options: Dict[str, Any]) -> Dict[str, Any]:
        """A single unclustered model gets the mixture base, per-cluster fits a Gaussian."""
        if options.get("base") is None:
            options = {**options, "base": "gmm" if options.get("clusters") == "none" else "gaussian"}
        return options

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        seed, threads = context.config.seed, context.config.threads
        dims = parse_dims(command_input["dims"])
        X = load_dataset(command_input["input"], labels_path=command_input.get("labels"))
        if command_input["holdout"] > 0:
            X, test = split_train_test(X, command_input["holdout"], seed)
            for data, filename in ((X, "train.csv"), (test, "test.csv")):
                path = context.path(filename)
                save_dataset(DataMatrix(data.values), path, "csv")
                context.artifact(path, "dataset")

        context.display.show_stage(f"clusters from {command_input['clusters']}")
        g = _clusters(command_input["clusters"], X, command_input, context)
        groups_path = context.path("groups.csv")
        save_groups(g, groups_path)
        context.artifact(groups_path, "groups")

        mlp = MlpConfig(
            widths=tuple(command_input["widths"]),
            learning_rate=command_input["learning_rate"],
            epochs=command_input["epochs"],
            batch_size=command_input["batch_size"],
            clip_norm=command_input.get("clip_norm"),
        )
        mlp.validate()
        cfg = ClusteredConfig(
            two_step=TwoStepConfig(
                base_kind=command_input["base"],
                n_components=command_input["components"],
                decoder_kind=command_input["decoder"],
                mlp=mlp,
            ),
            k=command_input["k"],
            variant=command_input["variant"],
            seed=seed,
            parallel=command_input["parallel"],
            threads=threads,
        )
        context.display.show_stage(f"training {g.L} cluster model(s)")
        bundle = context.path(BUNDLE_DIR)
        if command_input["dtype"] == "f64":
            model = train_clustered(X, g, dims, cfg, bundle_dir=bundle)
        else:
            model = train_clustered(X, g, dims, cfg)
            save_bundle(model, bundle, command_input["dtype"])
        context.artifact(bundle, "bundle")

        clusters = []
        for entry in model.entries:
            meta = (entry.spec or {}).get("meta", {})
            clusters.append(
                {
                    "index": entry.index,
                    "size": entry.size,
                    "dim": entry.dim,
                    "d_hat": entry.d_hat,
                    "reconstruction_error": meta.get("reconstruction_error"),
                }
            )
        report = {
            "L": model.L,
            "dims_mode": model.dims_mode,
            "weights": model.weights.tolist(),
            "peak_resident": model.tracker.peak,
            "clusters": clusters,
        }
        report_path = context.path("train_report.json")
        write_json(report_path, report)
        context.artifact(report_path, "report")
        context.display.show_table(
            ["cluster", "size", "dim", "d_hat", "recon"],
            [[c["index"], c["size"], c["dim"], "-" if c["d_hat"] is None else c["d_hat"], c["reconstruction_error"]] for c in clusters],
        )
        return {"success": True, "output": f"trained {model.L} cluster model(s) with dims {model.dims}"}


def get_command() -> BaseCommand:
    return TrainCommand()
