"""Shared exception hierarchy.

Every pipeline error carries the process exit code the CLI maps it to.
Module-specific subclasses (CatalogError, DegenerateInputError, ParseError)
live next to the code that raises them.
"""
from typing import Iterable, List, Optional


class PipelineError(Exception):
    """Base class for all errors raised by the pipeline."""
    exit_code = 3


class ContractError(PipelineError):
    """Raised when a caller violates an operation's preconditions."""
    exit_code = 1


class DataError(PipelineError):
    """Raised when input data is malformed, incomplete or inconsistent."""
    exit_code = 2

    def __init__(self, message: str, keys: Optional[Iterable] = None):
        """Initialize data error.

        Args:
            message: Human readable description
            keys: Offending keys (orphan rows, duplicates, missing instances)
        """
        self.keys: List = list(keys) if keys is not None else []
        if self.keys:
            preview = ", ".join(str(k) for k in self.keys[:10])
            more = f" (+{len(self.keys) - 10} more)" if len(self.keys) > 10 else ""
            message = f"{message}: {preview}{more}"
        super().__init__(message)


class InternalConsistencyError(PipelineError):
    """Raised when the pipeline reaches a state its own invariants forbid."""
    exit_code = 3
