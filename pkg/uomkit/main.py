"""Command line interface for uomkit.

The front door discovers the registered subcommands, builds one
argparse subparser per command from its input schema (long flags
only), resolves the configuration from schema defaults, an optional
config file and the explicit flags, and runs the command. Every run
writes ``run.json`` into its output directory.

Exit codes: ``0`` on success, ``1`` on a runtime failure (including a
failed acceptance check), ``2`` on a usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Any, Dict, List, Optional

from .base_command import BaseCommand, CommandContext
from .command_registry import DynamicCommandRegistry
from .config import RunConfig, load_config_file, parse_int_list
from .display import RunDisplay
from .errors import ArgumentError
from .state import RunRecord, portable_path

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_TYPES = {"integer": int, "number": float, "string": str, "path": str}


def _int_list(value: str) -> List[int]:
    try:
        return parse_int_list(value)
    except ArgumentError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_property(parser: argparse.ArgumentParser, key: str, spec: Dict[str, Any]) -> None:
    help_text = spec.get("description", "")
    if "default" in spec:
        help_text += f" (default: {spec['default']})"
    if spec.get("positional"):
        parser.add_argument(key, choices=spec.get("enum"), help=help_text)
        return
    flag = "--" + key.replace("_", "-")
    kind = spec.get("type", "string")
    if kind == "boolean":
        parser.add_argument(flag, dest=key, action="store_true", default=None, help=help_text)
    elif kind == "int_list":
        parser.add_argument(flag, dest=key, type=_int_list, metavar="K1,K2,...", help=help_text)
    else:
        parser.add_argument(flag, dest=key, type=_TYPES[kind], help=help_text)


def build_parser(registry: DynamicCommandRegistry) -> tuple:
    """Return the top-level parser and the subparser of every command."""
    parser = argparse.ArgumentParser(
        prog="uomkit",
        description="Union-of-manifolds verification and clustered pushforward models",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    by_name: Dict[str, argparse.ArgumentParser] = {}
    for command in registry.commands.values():
        sub = subparsers.add_parser(
            command.name, help=command.description, description=command.description, allow_abbrev=False
        )
        for key, spec in command.properties().items():
            _add_property(sub, key, spec)
        by_name[command.name] = sub
    return parser, by_name


def _coerce(command: BaseCommand, options: Dict[str, Any]) -> Dict[str, Any]:
    """Convert config-file values to the types the schema declares."""
    properties = command.properties()
    out = dict(options)
    for key, value in options.items():
        kind = properties.get(key, {}).get("type")
        if value is None or kind is None:
            continue
        if kind == "int_list":
            out[key] = parse_int_list(value)
        elif kind == "boolean" and isinstance(value, str):
            out[key] = value.strip().lower() in ("1", "true", "yes", "on")
        elif kind in _TYPES and not isinstance(value, bool):
            try:
                out[key] = _TYPES[kind](value)
            except (TypeError, ValueError) as exc:
                raise ArgumentError(f"--{key.replace('_', '-')}: cannot convert {value!r} to {kind}") from exc
    return out


def _echo(command: BaseCommand, config: RunConfig) -> Dict[str, Any]:
    """The resolved configuration as written to run.json, with portable paths."""
    echo = config.to_dict()
    echo["out"] = portable_path(config.out, os.getcwd())
    for key, spec in command.properties().items():
        value = echo["options"].get(key)
        if spec.get("type") == "path" and value:
            echo["options"][key] = portable_path(value, config.out)
    return echo


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the ``uomkit`` command line; returns the exit code."""
    registry = DynamicCommandRegistry()
    registry.load_commands()
    parser, subparsers = build_parser(registry)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    command = registry.get_command(args.command)
    sub = subparsers[args.command]
    flags = {key: value for key, value in vars(args).items() if key != "command"}
    try:
        file_values = load_config_file(flags["config"]) if flags.get("config") else {}
        config = RunConfig.from_sources(command.name, command.defaults(), file_values, flags)
        config.options = command.resolve(_coerce(command, config.options))
    except (ArgumentError, OSError) as exc:
        sub.print_usage(sys.stderr)
        print(f"uomkit {command.name}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    problems = command.validate({**config.options, "threads": config.threads, "verbosity": config.verbosity})
    if problems:
        sub.print_usage(sys.stderr)
        print(f"uomkit {command.name}: error: {'; '.join(problems)}", file=sys.stderr)
        return EXIT_USAGE

    display = RunDisplay(config.verbosity)
    display.install_logging()
    display.show_header(command.name, config.out, config.seed, config.threads)
    os.makedirs(config.out, exist_ok=True)
    record = RunRecord(out_dir=config.out, config=_echo(command, config))
    context = CommandContext(config=config, display=display, record=record)
    try:
        result = command.execute(config.options, context)
    except KeyboardInterrupt:
        result = {"success": False, "error": "interrupted"}

    record.status = "success" if result.get("success") else "failed"
    record.error = "" if result.get("success") else str(result.get("error", ""))
    display.show_artifact(portable_path(record.save(), os.getcwd()))
    if result.get("success"):
        display.show_success(str(result.get("output", "done")))
        return EXIT_OK
    display.show_error(record.error, result.get("suggestion", ""))
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
