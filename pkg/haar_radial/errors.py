"""
Errors
------
Exception hierarchy shared by the services and the CLI.
"""
from __future__ import annotations

from enum import Enum


class HaarRadialError(Exception):
    """Base class for every error raised by this package."""


class NotUnitaryError(HaarRadialError):
    pass


class SingularityError(HaarRadialError):
    """A matrix that must be inverted is numerically singular."""

    def __init__(self, stage: str, smallest_sv: float | None = None):
        self.stage = stage
        self.smallest_sv = smallest_sv
        detail = f" (smallest singular value {smallest_sv:.3e})" if smallest_sv is not None else ""
        super().__init__(f"singular matrix at stage '{stage}'{detail}")


class DegenerateSpectrumError(HaarRadialError):
    def __init__(self, min_gap: float):
        self.min_gap = min_gap
        super().__init__(f"eigenvalue collision, min gap {min_gap:.3e}")


class PoleError(HaarRadialError):
    """(1 - λδ) is numerically singular: λ is a pole of the characteristic function."""

    def __init__(self, lam: complex):
        self.lam = lam
        super().__init__(f"λ = {lam} is a pole of the characteristic function")


class DegenerateReason(str, Enum):
    UNIT_CIRCLE_DELTA = "UnitCircleDelta"
    EIG_COLLISION = "EigCollision"
    ZERO_FIRST_COORDINATE = "ZeroFirstCoordinate"
    U_PLUS_ONE_SINGULAR = "UPlusOneSingular"
    KERNEL_DIMENSION = "KernelDimension"
    TIE_OR_BOUNDARY = "TieOrBoundary"


class DegenerateSampleError(HaarRadialError):
    """The sample lies outside general position; Monte Carlo loops count and resample."""

    def __init__(self, reason: DegenerateReason, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)


class ReconstructionError(HaarRadialError):
    pass


class DomainError(HaarRadialError):
    """Input lies outside the domain where a density is finite."""


class ChainStuck(HaarRadialError):
    def __init__(self, acceptance_rate: float):
        self.acceptance_rate = acceptance_rate
        super().__init__(f"MCMC acceptance rate {acceptance_rate:.4f} after adaptation")


class RecordParseError(HaarRadialError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")
