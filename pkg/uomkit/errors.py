"""Exception hierarchy for uomkit.

Every error raised deliberately by the library derives from
:class:`UomError`, so the command line front door can tell runtime
failures (exit code 1) apart from programming errors. Subclasses that
correspond to a builtin category (bad argument values, bad indices)
also inherit from the builtin so callers may catch either.
"""

from __future__ import annotations


class UomError(Exception):
    """Base class for all uomkit errors."""


class ArgumentError(UomError, ValueError):
    """An argument is outside the range an operation accepts."""


class GroupIndexError(UomError, IndexError):
    """A group assignment refers to a group that does not exist."""


class DataParseError(UomError):
    """A dataset file could not be parsed (ragged or non-numeric rows)."""


class DataValidationError(UomError):
    """A dataset holds values that violate the DataMatrix invariants."""


class DataFormatError(UomError):
    """A raw dataset does not agree with its JSON sidecar."""


class DuplicatePointError(UomError):
    """Two points coincide where a strictly positive distance is required."""


class EstimatorUndefinedError(UomError):
    """The intrinsic-dimension estimator is undefined for the given input."""


class PlacementError(UomError):
    """Synthetic components could not be separated by the requested gap."""


class TrainingError(UomError):
    """A model fit diverged or could not proceed."""


class ModelLoadError(UomError):
    """A persisted model is missing or unreadable."""


class IntegrityError(UomError):
    """A persisted artifact does not match its recorded checksum or invariants."""


class UndefinedCorrelationError(UomError):
    """Correlation is undefined because an input vector is constant."""


class AcceptanceError(UomError):
    """A reproduction experiment failed one of its acceptance criteria."""
