"""
Dynamic command registry for the uomkit command line.

The registry discovers subcommand implementations in the
:mod:`uomkit.commands` package at runtime instead of keeping a
hardcoded list in the front door. Command modules export either a
``get_command()`` function returning a :class:`BaseCommand` instance
or define a subclass of :class:`BaseCommand`; the first one found is
registered. Modules are imported with ``importlib``.
"""

from __future__ import annotations

import importlib
import inspect
import logging
import os
from types import ModuleType
from typing import Any, Dict, List, Optional

from .base_command import BaseCommand

logger = logging.getLogger(__name__)

DEFAULT_SEARCH_PATHS = ["uomkit.commands"]


class DynamicCommandRegistry:
    """Manage discovery and registration of subcommands.

    Parameters
    ----------
    search_paths: Optional[List[str]]
        Package paths (e.g. ``uomkit.commands``) whose modules are
        searched for commands.
    """

    def __init__(self, search_paths: Optional[List[str]] = None) -> None:
        self.search_paths = search_paths or list(DEFAULT_SEARCH_PATHS)
        self._commands: Dict[str, BaseCommand] = {}

    @property
    def commands(self) -> Dict[str, BaseCommand]:
        """Registered command instances keyed by name, sorted by name."""
        return dict(sorted(self._commands.items()))

    def load_commands(self) -> None:
        """Import every module of the search paths and register its command.

        Modules that fail to import are logged and skipped. Later
        registrations of the same name overwrite earlier ones.
        """
        for pkg_path in self.search_paths:
            try:
                package = importlib.import_module(pkg_path)
            except ImportError as exc:
                logger.warning("cannot import command package %s: %s", pkg_path, exc)
                continue
            pkg_dir = os.path.dirname(package.__file__)
            for filename in sorted(os.listdir(pkg_dir)):
                if filename.startswith("_") or not filename.endswith(".py"):
                    continue
                full_module_name = f"{pkg_path}.{filename[:-3]}"
                try:
                    module = importlib.import_module(full_module_name)
                except ImportError as exc:
                    logger.warning("skipping command module %s: %s", full_module_name, exc)
                    continue
                command = self._extract_command_from_module(module)
                if command is not None:
                    self._commands[command.name] = command

    def _extract_command_from_module(self, module: ModuleType) -> Optional[BaseCommand]:
        """Call ``get_command()`` if present, else instantiate the first BaseCommand subclass."""
        factory = getattr(module, "get_command", None)
        if callable(factory):
            command = factory()
            return command if isinstance(command, BaseCommand) else None
        for _, obj in inspect.getmembers(module, inspect.isclass):
            if issubclass(obj, BaseCommand) and obj is not BaseCommand and obj.__module__ == module.__name__:
                return obj()
        return None

    def get_command_schemas(self) -> List[Dict[str, Any]]:
        """Name, description and schema of every registered command."""
        return [
            {"name": c.name, "description": c.description, "input_schema": c.input_schema}
            for c in self.commands.values()
        ]

    def get_command(self, name: str) -> Optional[BaseCommand]:
        """Retrieve a command instance by its name."""
        return self._commands.get(name)
