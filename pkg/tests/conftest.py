"""Shared fixtures for the uomkit test suite."""

import logging
import math
from typing import Callable, List

import numpy as np
import pytest

from uomkit.data import DataMatrix
from uomkit.display import _DisplayHandler
from uomkit.main import main


@pytest.fixture(autouse=True)
def reset_uomkit_logger():
    """Undo the display routing a CLI run installs on the ``uomkit`` logger."""
    yield
    logger = logging.getLogger("uomkit")
    for handler in list(logger.handlers):
        if isinstance(handler, _DisplayHandler):
            logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def line_points() -> DataMatrix:
    """The 1-D points 0, 1 and e."""
    return DataMatrix(np.array([[0.0], [1.0], [math.e]]))


@pytest.fixture
def two_blobs() -> DataMatrix:
    """Two labeled Gaussian blobs in R^4 far apart (60 and 90 points)."""
    rng = np.random.default_rng(7)
    a = rng.normal(0.0, 1.0, (60, 4))
    b = rng.normal(0.0, 1.0, (90, 4)) + 100.0
    return DataMatrix(np.concatenate([a, b]), np.repeat([0, 1], [60, 90]))


@pytest.fixture
def run_cli(tmp_path) -> Callable[..., int]:
    """Run the command line with ``--out`` inside the test's temporary directory."""

    def run(*args: str, out: str = "out") -> int:
        argv: List[str] = list(args) + ["--out", str(tmp_path / out), "--verbosity", "minimal", "--threads", "1"]
        return main(argv)

    return run
