"""
Dimension-weighted classification command.

Split a labeled dataset, estimate each class's intrinsic dimension on
the training part, derive the class weights, then train a standard and
a dimension-weighted softmax classifier and compare their per-class
test accuracies. The correlation between the estimates and the
standard classifier's accuracies is reported when at least three
classes have both.
"""

from __future__ import annotations

import logging
from typing import Any, Dict, Optional

import numpy as np

from uomkit.base_command import BaseCommand, CommandContext
from uomkit.config import VARIANTS, VARIANT_K_MINUS_1, SoftmaxConfig
from uomkit.data import DataMatrix, GroupIndex, load_dataset, split_train_test, standardize
from uomkit.errors import ArgumentError, UndefinedCorrelationError
from uomkit.evaluation import id_accuracy_report, write_plot_tsv
from uomkit.idest import per_group_id
from uomkit.state import write_json
from uomkit.weights import id_weights, per_class_accuracy, save_classifier, train_softmax_weighted, write_weights_csv

logger = logging.getLogger(__name__)


def _nan_to_none(values: np.ndarray) -> list:
    return [None if np.isnan(v) else float(v) for v in values]


class WeightsCommand(BaseCommand):
    """Compare standard and dimension-weighted cross entropy."""

    name = "weights"
    description = "Train standard vs intrinsic-dimension weighted softmax classifiers"
    input_schema: Dict[str, Any] = {
        "type": "object",
        "properties": {
            "input": {"type": "path", "description": "Dataset (CSV or raw with JSON sidecar)"},
            "labels": {"type": "path", "description": "Single-column label CSV"},
            "k": {"type": "integer", "description": "Neighbor count of the dimension estimate", "minimum": 2, "default": 20},
            "variant": {"type": "string", "description": "Estimator denominator", "enum": list(VARIANTS), "default": VARIANT_K_MINUS_1},
            "test_fraction": {"type": "number", "description": "Fraction held out for accuracies", "default": 0.2},
            "standardize": {"type": "boolean", "description": "Standardize features with training statistics", "default": False},
            "epochs": {"type": "integer", "description": "Classifier epochs", "minimum": 0, "default": 50},
            "learning_rate": {"type": "number", "description": "Classifier step size", "default": 0.1},
            "batch_size": {"type": "integer", "description": "Classifier mini-batch size", "minimum": 1, "default": 64},
        },
        "required": ["input", "labels"],
    }

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        seed = context.config.seed
        k = command_input["k"]
        X = load_dataset(command_input["input"], labels_path=command_input["labels"])
        classes = GroupIndex.from_labels(X.labels)
        train, test = split_train_test(DataMatrix(X.values, classes.assignment), command_input["test_fraction"], seed)
        g_train = GroupIndex.from_assignment(train.labels, L=classes.L)

        context.display.show_stage(f"estimating {classes.L} class dimension(s) at k={k}")
        report = per_group_id(train, g_train, [k], command_input["variant"], threads=context.config.threads)
        d_hats = []
        for group in report.groups:
            estimate = group.estimates[k]
            if estimate is None:
                raise ArgumentError(f"class {classes.group_name(group.group)}: {group.size} training points are too few for k={k}")
            d_hats.append(estimate.value)
        omega = id_weights(d_hats)

        x_train, x_test = train.as_float64(), test.as_float64()
        if command_input["standardize"]:
            scaled, mean, scale = standardize(train)
            x_train, x_test = scaled.values, (x_test - mean) / scale
        cfg = SoftmaxConfig(
            learning_rate=command_input["learning_rate"],
            epochs=command_input["epochs"],
            batch_size=command_input["batch_size"],
            seed=seed,
        )
        context.display.show_stage("training standard and weighted classifiers")
        standard = train_softmax_weighted(x_train, train.labels, None, cfg, n_classes=classes.L)
        weighted = train_softmax_weighted(x_train, train.labels, omega, cfg)
        acc_standard = per_class_accuracy(standard, x_test, test.labels, classes.L)
        acc_weighted = per_class_accuracy(weighted, x_test, test.labels, classes.L)

        weights_path = context.path("weights.csv")
        write_weights_csv(omega, weights_path)
        context.artifact(weights_path, "weights")
        for clf, filename in ((standard, "classifier_standard.params"), (weighted, "classifier_weighted.params")):
            path = context.path(filename)
            save_classifier(clf, path)
            context.artifact(path, "classifier")

        result: Dict[str, Any] = {
            "k": k,
            "variant": command_input["variant"],
            "classes": [classes.group_name(c) for c in range(classes.L)],
            "d_hats": d_hats,
            "omega": omega.omega.tolist(),
            "accuracy_standard": _nan_to_none(acc_standard),
            "accuracy_weighted": _nan_to_none(acc_weighted),
            "overall_standard": float(np.mean(standard.predict(x_test) == test.labels)),
            "overall_weighted": float(np.mean(weighted.predict(x_test) == test.labels)),
            "correlation": None,
        }
        present = ~np.isnan(acc_standard)
        if int(present.sum()) >= 3:
            try:
                correlation = id_accuracy_report(np.asarray(d_hats)[present].tolist(), acc_standard[present].tolist())
            except UndefinedCorrelationError as exc:
                logger.warning("no correlation: %s", exc)
            else:
                result["correlation"] = correlation
                points = correlation["points"]
                tsv_path = context.path("id_accuracy.tsv")
                write_plot_tsv(tsv_path, [p["x"] for p in points], [p["y"] for p in points], [p["fit"] for p in points])
                context.artifact(tsv_path, "plot data")
        else:
            logger.warning("correlation needs at least 3 classes with test points, got %d", int(present.sum()))

        report_path = context.path("id_accuracy.json")
        write_json(report_path, result)
        context.artifact(report_path, "report")
        context.display.show_table(
            ["class", "d_hat", "omega", "acc", "acc_weighted"],
            [
                [name, d, w, "-" if a is None else a, "-" if b is None else b]
                for name, d, w, a, b in zip(
                    result["classes"], d_hats, result["omega"], result["accuracy_standard"], result["accuracy_weighted"]
                )
            ],
        )
        return {
            "success": True,
            "output": f"test accuracy {result['overall_standard']:.4f} standard, {result['overall_weighted']:.4f} weighted",
        }


def get_command() -> BaseCommand:
    return WeightsCommand()
