"""Run records written next to every command's outputs.

A :class:`RunRecord` collects the resolved configuration of a command,
the artifacts it produced and its final status, and persists them as
``run.json`` in the output directory. Timestamps and version strings
are confined to the ``meta`` key so that two runs with the same command
line and seed produce byte-identical payloads everywhere else.
"""

from __future__ import annotations

import datetime
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List

RUN_FILE = "run.json"


@dataclass
class ArtifactEntry:
    """A single file written by a command.

    Attributes
    ----------
    path: str
        Location of the file relative to the output directory.
    kind: str
        Short description such as ``"dataset"``, ``"report"`` or ``"bundle"``.
    """

    path: str
    kind: str


@dataclass
class RunRecord:
    """Resolved configuration, outputs and status of one command run."""

    out_dir: str
    config: Dict[str, Any]
    artifacts: List[ArtifactEntry] = field(default_factory=list)
    status: str = "running"
    error: str = ""
    started: str = field(default_factory=lambda: datetime.datetime.now().isoformat())

    def add_artifact(self, path: str, kind: str) -> str:
        """Record ``path`` (made relative to the output directory) and return it."""
        relative = portable_path(path, self.out_dir)
        self.artifacts.append(ArtifactEntry(path=relative, kind=kind))
        return relative

    def to_dict(self) -> Dict[str, Any]:
        from . import __version__

        return {
            "config": self.config,
            "artifacts": [{"path": a.path, "kind": a.kind} for a in self.artifacts],
            "status": self.status,
            "error": self.error,
            "meta": {
                "started": self.started,
                "finished": datetime.datetime.now().isoformat(),
                "version": __version__,
            },
        }

    def save(self) -> str:
        """Write ``run.json`` and return its path."""
        os.makedirs(self.out_dir, exist_ok=True)
        path = os.path.join(self.out_dir, RUN_FILE)
        write_json(path, self.to_dict())
        return path


def portable_path(path: str, base_dir: str) -> str:
    """Express ``path`` relative to ``base_dir`` so reports never hold absolute paths."""
    if not path:
        return path
    return os.path.relpath(os.path.abspath(path), os.path.abspath(base_dir)).replace(os.sep, "/")


def write_json(path: str, payload: Dict[str, Any]) -> None:
    """Write ``payload`` as stable, sorted, indented JSON."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")


def read_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
