from typing import List, Optional


class FairScoreError(Exception):
    """Base class for every error the command line maps to an exit code."""

    exit_code = 1


class InstanceError(FairScoreError):
    """An instance, score table, partition or argument failed parsing or validation."""

    exit_code = 2

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        self.diagnostics = list(diagnostics or [])
        if self.diagnostics:
            message = f"{message}: " + "; ".join(self.diagnostics)
        super().__init__(message)


class DimensionError(InstanceError, ValueError):
    """Two tables, vectors or matrices that must line up do not."""


class GridCapExceeded(InstanceError, ValueError):
    """An oracle grid would enumerate more points than the configured cap."""


class PopulationCountError(FairScoreError):
    exit_code = 3


class InfeasibleError(FairScoreError):
    exit_code = 4


class UnboundedError(FairScoreError):
    exit_code = 5


class VerificationError(FairScoreError):
    exit_code = 6


class SimplexError(FairScoreError):
    """The solver gave up (iteration cap) instead of returning a status."""
