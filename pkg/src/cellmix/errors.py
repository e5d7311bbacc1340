"""Error taxonomy for the cellular mixing laboratory.

Every guard in the package raises one of these. They form a flat family under
CellmixError so callers can catch per-module groups or everything at once.
"""


class CellmixError(Exception):
    """Base class for all package errors."""


class ConfigError(CellmixError):
    """Invalid experiment configuration (CLI exit code 3)."""


# ---------------------------------------------------------------------------
# domain

class DomainError(CellmixError):
    pass


class NonIntegerReciprocal(DomainError):
    """Tiling parameter lambda must have integer reciprocal >= 2."""


class ResolutionTooCoarse(DomainError):
    """Grid cannot align with the requested tiles or moves."""


class TauEqualsOne(DomainError):
    """Geometric rescaling is undefined at tau = 1."""


class EmptyMask(DomainError):
    pass


class MaskTooLarge(DomainError):
    """Binary tracer level sets must occupy at most half the domain."""


class MisalignedTile(DomainError):
    pass


# ---------------------------------------------------------------------------
# diagnostics

class DiagnosticsError(CellmixError):
    pass


class ZeroField(DiagnosticsError):
    pass


class NotMeanFree(DiagnosticsError):
    pass


class PadTooSmall(DiagnosticsError):
    """Zero-padding factor below 2 does not isolate periodic images."""


class BallNotUnmixed(DiagnosticsError):
    """Candidate ball fails the unmixedness threshold."""


class EmptySet(DiagnosticsError):
    pass


class TilesNotMeanFree(DiagnosticsError):
    pass


class NoWitnessBall(DiagnosticsError):
    pass


# ---------------------------------------------------------------------------
# sobolev

class SobolevError(CellmixError):
    pass


class StencilOverrun(SobolevError):
    """Difference stencil does not fit inside the grid."""


class InfinityPNotSupported(SobolevError):
    """Fractional seminorms require finite p."""


# ---------------------------------------------------------------------------
# blocks

class BlockError(CellmixError):
    pass


class UnsupportedLambda(BlockError):
    pass


class RealizationInfeasible(BlockError):
    """A rigid move cannot be realized by swirls supported inside Q."""


class MisalignedBlocks(BlockError):
    pass


# ---------------------------------------------------------------------------
# lagrangian

class LagrangianError(CellmixError):
    pass


class CFLViolation(LagrangianError):
    """A particle step would exceed one grid cell."""


class WitnessNotFound(LagrangianError):
    """No tile retains stretched points of both phases."""


class HorizonTooShort(LagrangianError):
    pass


class TrappingNotReached(LagrangianError):
    """Requested trapping threshold not met within the horizon."""


# ---------------------------------------------------------------------------
# harness

class HarnessError(CellmixError):
    pass


class TauBelowFloor(HarnessError):
    """tau must be >= lambda^(1-s) for bounded budgets."""


class BudgetUnbounded(HarnessError):
    """Per-stage budgets exceed the configured cap."""


# ---------------------------------------------------------------------------
# warnings

class PairBudgetWarning(UserWarning):
    """Pair sample too small for a stable stretch supremum."""
