"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: user/validation errors exit 1,
runtime/numeric failures exit 2, I/O failures exit 3.
"""

from __future__ import annotations


class KspinError(Exception):
    """Base class for all package-specific errors."""


class InvalidTupleError(KspinError):
    """A node tuple is out of range, not strictly increasing, or collides
    with the excluded center node."""


class InvalidSampleError(KspinError):
    """A spin configuration has the wrong length or entries outside {-1,+1}."""


class ShapeError(KspinError):
    """Array dimensions are inconsistent with the model's p, k, or each other."""


class CapabilityError(KspinError):
    """A request exceeds a hard resource guard (state enumeration limit,
    dense design-matrix limit)."""


class GenerationError(KspinError):
    """Random hypergraph generation exhausted its retry budget."""


class InvalidModelError(KspinError):
    """The loss is non-finite at the solver's starting point."""


class ParseError(KspinError):
    """A data file is malformed; carries the offending 1-based line number."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


#: Errors that indicate bad user input rather than an internal failure.
VALIDATION_ERRORS = (
    InvalidTupleError,
    InvalidSampleError,
    ShapeError,
    CapabilityError,
    ParseError,
    ValueError,
)
