"""
Base classes and interfaces for defining uomkit subcommands.

Every subcommand of the ``uomkit`` command line is a subclass of
:class:`BaseCommand` that overrides :meth:`BaseCommand.run`. A small,
uniform interface lets the front door build flags, fill defaults,
validate values and echo the resolved configuration without knowing
anything about the individual commands.

Each command exposes:

* ``name`` -- the subcommand name typed on the command line.
* ``description`` -- a one-line summary shown in ``--help``.
* ``input_schema`` -- a JSON-schema-like description of the options.
  Every property becomes a long flag (underscores turn into dashes);
  ``default``, ``minimum``, ``enum`` and ``type`` drive parsing and
  validation. The extra types ``"int_list"`` and ``"path"`` are
  understood, and ``"positional": true`` turns a property into a
  positional argument.
* ``run`` -- performs the work. It receives the resolved options and a
  :class:`CommandContext` and returns a dictionary with a ``success``
  flag and either ``output`` or ``error``.

Commands live in the :mod:`uomkit.commands` package and are discovered
at runtime by :class:`~uomkit.command_registry.DynamicCommandRegistry`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from .config import RunConfig
from .display import RunDisplay
from .errors import UomError
from .state import RunRecord

#: Options every subcommand accepts.
COMMON_PROPERTIES: Dict[str, Dict[str, Any]] = {
    "out": {"type": "path", "description": "Output directory", "default": "out"},
    "seed": {"type": "integer", "description": "Root seed of all randomness", "default": 0},
    "threads": {"type": "integer", "description": "Worker cap (default from UOMKIT_THREADS)", "minimum": 1},
    "config": {"type": "path", "description": "JSON or YAML file with option values"},
    "verbosity": {
        "type": "string",
        "description": "Display verbosity",
        "enum": ["minimal", "standard", "verbose", "debug"],
        "default": "standard",
    },
}


@dataclass
class CommandContext:
    """Everything a running command needs besides its options.

    Attributes
    ----------
    config: RunConfig
        Resolved configuration of the run.
    display: RunDisplay
        Terminal output for the run.
    record: RunRecord
        Run record that collects the artifacts written.
    """

    config: RunConfig
    display: RunDisplay
    record: RunRecord

    @property
    def out_dir(self) -> str:
        return self.config.out

    def path(self, *parts: str) -> str:
        """Location of an output file inside the output directory."""
        return os.path.join(self.config.out, *parts)

    def artifact(self, path: str, kind: str) -> str:
        """Record a written file and announce it; returns its relative path."""
        relative = self.record.add_artifact(path, kind)
        self.display.show_artifact(relative)
        return relative


class BaseCommand:
    """Abstract base class for all subcommands.

    Subclasses set ``name``, ``description`` and ``input_schema`` and
    override :meth:`run`.
    """

    #: Subcommand name. Overridden by subclasses.
    name: str = ""
    #: Short, human-readable description of the command.
    description: str = ""
    #: Schema of the command-specific options.
    input_schema: Dict[str, Any] = {}

    def properties(self) -> Dict[str, Dict[str, Any]]:
        """Command-specific properties followed by the common ones."""
        merged = dict(self.input_schema.get("properties", {}))
        for key, spec in COMMON_PROPERTIES.items():
            merged.setdefault(key, spec)
        return merged

    def required(self) -> List[str]:
        return list(self.input_schema.get("required", []))

    def defaults(self) -> Dict[str, Any]:
        return {key: spec["default"] for key, spec in self.properties().items() if "default" in spec}

    def resolve(self, options: Dict[str, Any]) -> Dict[str, Any]:
        """Fill defaults that depend on other options. The base class has none."""
        return options

    def validate(self, options: Dict[str, Any]) -> List[str]:
        """Return usage problems of the resolved ``options`` (empty when valid)."""
        problems: List[str] = []
        for key in self.required():
            if options.get(key) in (None, ""):
                problems.append(f"--{key.replace('_', '-')} is required")
        for key, spec in self.properties().items():
            value = options.get(key)
            if value is None:
                continue
            flag = f"--{key.replace('_', '-')}"
            if "enum" in spec and value not in spec["enum"]:
                problems.append(f"{flag} must be one of {', '.join(map(str, spec['enum']))}, got {value!r}")
            if "minimum" in spec:
                values = value if isinstance(value, (list, tuple)) else [value]
                if any(v < spec["minimum"] for v in values):
                    problems.append(f"{flag} must be >= {spec['minimum']}, got {value!r}")
        return problems

    def execute(self, command_input: Dict[str, Any], context: CommandContext) -> Dict[str, Any]:
        """Run the command, turning library and I/O failures into an error result."""
        try:
            return self.run(command_input, context)
        except (UomError, OSError) as e:
            return {"success": False, "error": str(e)}

    def run(self, command_input: Dict[str, Any], context: Optional[CommandContext] = None) -> Dict[str, Any]:
        """Execute the command with the resolved options.

        Parameters
        ----------
        command_input: Dict[str, Any]
            Option values keyed by property name, defaults filled in.
        context: Optional[CommandContext]
            Output directory, display and run record of this run.

        Returns
        -------
        Dict[str, Any]
            ``{"success": True, "output": ...}`` on success and
            ``{"success": False, "error": ...}`` on failure. Commands
            may add further keys.
        """
        raise NotImplementedError("Commands must implement the run method")
