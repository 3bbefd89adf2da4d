"""User display formatting for the uomkit command line.

The :class:`RunDisplay` class centralizes all terminal output and
verbosity control for a run. It provides helpers for showing headers,
pipeline stages, artifacts, result tables, errors and successes, and it
can take over the ``uomkit`` logger so that library log records obey
the same verbosity switch. Keeping these concerns out of the numerical
modules keeps them silent when used as a library.
"""

from __future__ import annotations

import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, TextIO

from colorama import Fore, Style
from colorama import init as colorama_init

_LEVELS = {
    "minimal": logging.WARNING,
    "standard": logging.INFO,
    "verbose": logging.INFO,
    "debug": logging.DEBUG,
}


class _DisplayHandler(logging.Handler):
    """Forward ``uomkit`` log records to a :class:`RunDisplay`."""

    def __init__(self, display: "RunDisplay") -> None:
        super().__init__()
        self.display = display

    def emit(self, record: logging.LogRecord) -> None:
        try:
            message = self.format(record)
        except Exception:
            self.handleError(record)
            return
        if record.levelno >= logging.ERROR:
            self.display.show_error(message)
        elif record.levelno >= logging.WARNING:
            self.display.show_warning(message)
        elif record.levelno >= logging.INFO:
            self.display.show_status(message)
        else:
            self.display.debug_log(message)


class RunDisplay:
    """Terminal output with verbosity control."""

    def __init__(self, verbosity_level: str = "standard", stream: Optional[TextIO] = None):
        """Initialize the display.

        Parameters
        ----------
        verbosity_level: str
            Desired verbosity (``"minimal"``, ``"standard"``, ``"verbose"`` or ``"debug"``).
        stream: Optional[TextIO]
            Destination of the output; standard error when omitted so
            that stdout stays free for piping.
        """
        if verbosity_level not in _LEVELS:
            verbosity_level = "standard"
        self.verbosity = verbosity_level
        self.show_debug = verbosity_level == "debug"
        self.stream = stream if stream is not None else sys.stderr
        colorama_init()

    def install_logging(self) -> logging.Handler:
        """Route the ``uomkit`` logger through this display and return the handler."""
        logger = logging.getLogger("uomkit")
        for handler in list(logger.handlers):
            if isinstance(handler, _DisplayHandler):
                logger.removeHandler(handler)
        handler = _DisplayHandler(self)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
        logger.setLevel(_LEVELS[self.verbosity])
        logger.propagate = False
        return handler

    def _write(self, text: str) -> None:
        print(text, file=self.stream)

    def show_header(self, command: str, out_dir: str, seed: int, threads: int) -> None:
        """Display the run header."""
        if self.verbosity == "minimal":
            return
        self._write(f"{Style.BRIGHT}uomkit {command}{Style.RESET_ALL}")
        self._write(f"  out: {out_dir}  seed: {seed}")
        if self.verbosity in ("verbose", "debug"):
            self._write(f"  threads: {threads}")

    def show_stage(self, stage: str) -> None:
        """Announce a pipeline stage."""
        if self.verbosity != "minimal":
            self._write(f"{Fore.CYAN}> {stage}{Style.RESET_ALL}")

    def show_status(self, status: str, details: str = "") -> None:
        """Display status updates based on verbosity."""
        if self.verbosity == "minimal":
            return
        if details and self.verbosity in ("verbose", "debug"):
            self._write(f"  {status}: {details}")
        else:
            self._write(f"  {status}")

    def show_artifact(self, path: str) -> None:
        """Report a written output file."""
        if self.verbosity != "minimal":
            self._write(f"  wrote {path}")

    def show_table(self, header: Sequence[str], rows: List[Sequence[Any]]) -> None:
        """Print a small aligned table."""
        if self.verbosity == "minimal":
            return
        cells = [[str(h) for h in header]] + [[_format_cell(c) for c in row] for row in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
        for index, row in enumerate(cells):
            line = "  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row))
            self._write(f"  {Style.BRIGHT}{line}{Style.RESET_ALL}" if index == 0 else f"  {line}")

    def show_criteria(self, criteria: List[Dict[str, Any]]) -> None:
        """Print acceptance criteria with pass/fail marks."""
        for item in criteria:
            mark = f"{Fore.GREEN}PASS" if item.get("passed") else f"{Fore.RED}FAIL"
            self._write(f"  {mark}{Style.RESET_ALL} {item.get('name')}: {_format_cell(item.get('value'))}")

    def show_warning(self, message: str) -> None:
        """Display a warning."""
        self._write(f"{Fore.YELLOW}warning: {message}{Style.RESET_ALL}")

    def show_error(self, error: str, suggestion: str = "") -> None:
        """Display an error message with an optional suggestion."""
        self._write(f"{Fore.RED}error: {error}{Style.RESET_ALL}")
        if suggestion:
            self._write(f"  hint: {suggestion}")

    def show_success(self, message: str) -> None:
        """Display a success message."""
        if self.verbosity != "minimal":
            self._write(f"{Fore.GREEN}{message}{Style.RESET_ALL}")

    def debug_log(self, message: str) -> None:
        """Display debug information when verbosity is debug."""
        if self.show_debug:
            self._write(f"{Style.DIM}debug: {message}{Style.RESET_ALL}")


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)
