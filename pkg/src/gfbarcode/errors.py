"""Exception hierarchy shared by every pipeline stage.

Each class carries the process exit code the command-line front end uses
when the error escapes a run.
"""

from __future__ import annotations


class GFBarcodeError(Exception):
    """Base class for all library errors."""

    exit_code = 1

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def with_stage(self, stage: str) -> "GFBarcodeError":
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ConfigInvalid(GFBarcodeError):
    exit_code = 2


class InvalidBounds(ConfigInvalid):
    """Declared bounds are non-positive or violate the small-map condition."""


class MeshMismatch(ConfigInvalid):
    """Samples or complexes built on different lattices were combined."""


class MemoryCapExceeded(GFBarcodeError):
    exit_code = 3

    def __init__(self, predicted: int, cap: int, *, stage: str | None = None):
        super().__init__(
            f"predicted cell count {predicted} exceeds memory cap {cap}", stage=stage
        )
        self.predicted = predicted
        self.cap = cap


class NumericalFailure(GFBarcodeError):
    exit_code = 4


class NoConvergence(NumericalFailure):
    """The inverse solve did not reach the requested residual."""

    def __init__(self, message: str, point=None, *, stage: str | None = None):
        super().__init__(message, stage=stage)
        self.point = point


class EmptyComplex(NumericalFailure):
    pass


class NonMonotone(NumericalFailure):
    """A cell has a smaller value than one of its faces (internal bug)."""


class BudgetExceeded(NumericalFailure):
    """Bottleneck distance to a reference barcode exceeds the certified bound."""
