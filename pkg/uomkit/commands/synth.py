"""
Synthetic dataset generation command.

Generate one component per requested intrinsic dimension, either an
affine-embedded hypercube or a random pushforward network, and compose
them into a labeled union whose components are at least ``gap`` apart.
Component ``i`` is generated with sub-seed stream ``i + 1`` of the root
seed; the placement directions use the root seed itself.
"""

from __future__ import annotations

from typing import Any, Dict, Optional

from uomkit.base_command import BaseCommand, CommandContext
from uomkit.data import save_dataset
from uomkit.rng import derive_seed
from uomkit.synth import compose_union, gen_affine_manifold, gen_pushforward_manifold


class SynthCommand(BaseCommand):
    """Write a synthetic union of manifolds with known dimensions."""

    name = "synth"
    description = "Generate a synthetic union of manifolds with known intrinsic dimensions"
    input_schema: Dict[str, Any] = {
        "type": "object",
        "properties": {
            "kind": {"type": "string", "description": "Component generator", "enum": ["affine", "pushforward"], "default": "affine"},
            "n": {"type": "integer", "description": "Points per component", "minimum": 1, "default": 1000},
            "dims": {"type": "int_list", "description": "True dimension of every component", "minimum": 1, "default": [2, 8]},
            "D": {"type": "integer", "description": "Ambient dimension", "minimum": 1, "default": 64},
            "d_latent": {"type": "integer", "description": "Latent size of pushforward generators", "minimum": 1, "default": 24},
            "widths": {"type": "int_list", "description": "Hidden widths of pushforward generators", "minimum": 1, "default": [64, 64]},
            "noise": {"type": "number", "description": "Gaussian noise scale of affine components", "minimum": 0, "default": 0.0},
            "gap": {"type": "number", "description": "Minimum distance between components", "minimum": 0, "default": 10.0},
            "format": {"type": "string", "description": "Dataset format", "enum": ["csv", "raw"], "default": "csv"},
        },
    }

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        seed = context.config.seed
        components = []
        for index, dim in enumerate(command_input["dims"]):
            sub_seed = derive_seed(seed, index + 1)
            if command_input["kind"] == "affine":
                components.append(
                    gen_affine_manifold(command_input["n"], dim, command_input["D"], sub_seed, command_input["noise"])
                )
            else:
                components.append(
                    gen_pushforward_manifold(
                        command_input["n"],
                        command_input["d_latent"],
                        dim,
                        command_input["D"],
                        sub_seed,
                        tuple(command_input["widths"]),
                    )
                )
        context.display.show_stage(f"composing {len(components)} component(s)")
        X, truth = compose_union(components, command_input["gap"], seed=seed)

        fmt = command_input["format"]
        data_path = context.path("data.csv" if fmt == "csv" else "data.raw")
        labels_path = context.path("labels.csv")
        save_dataset(X, data_path, fmt, labels_path=labels_path)
        context.artifact(data_path, "dataset")
        context.artifact(labels_path, "labels")
        truth_path = context.path("truth.json")
        truth.save(truth_path)
        context.artifact(truth_path, "truth")
        return {"success": True, "output": f"generated {X.n} points in R^{X.D} (dims {command_input['dims']})"}


def get_command() -> BaseCommand:
    return SynthCommand()
