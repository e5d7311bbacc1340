"""Domain primitives: the unit square, cell grids, tilings, stage schedules,
and mean-free binary tracers.

Geometry conventions
--------------------
The domain is the open unit square Q = (-1/2, 1/2)^2. A Grid splits Q into
N x N equal cells; scalar fields are cell values in an (N, N) array indexed
``values[ix, iy]`` with

    x = -1/2 + (ix + 1/2) / N,   y = -1/2 + (iy + 1/2) / N.

Tracers extend by zero outside Q. Binary tracers carry their two levels as
exact rationals so the mean-free constraint is checked with integer counts,
never floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    EmptyMask,
    MaskTooLarge,
    MisalignedTile,
    NonIntegerReciprocal,
    ResolutionTooCoarse,
    TauEqualsOne,
)

X_MIN = -0.5
X_MAX = 0.5


def as_fraction(x) -> Fraction:
    """Coerce int/float/Fraction/str to an exact Fraction.

    Floats go through Fraction(float) exactly (binary expansion), so callers
    who want 1/3 should pass Fraction(1, 3) or "1/3".
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on Q."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ResolutionTooCoarse(f"grid needs n >= 2, got {self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def cell_area(self) -> float:
        return 1.0 / self.n**2

    def axis(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return X_MIN + (np.arange(self.n) + 0.5) / self.n

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (x, y) of all cell centers, shape (n, n) each."""
        c = self.axis()
        return np.meshgrid(c, c, indexing="ij")

    def corner_axis(self) -> np.ndarray:
        """Cell-corner coordinates along one axis, (n+1,) points."""
        return X_MIN + np.arange(self.n + 1) / self.n


def reciprocal_of(lam) -> int:
    """Integer 1/lambda, validating the tiling parameter."""
    lam = as_fraction(lam)
    if lam <= 0 or lam >= 1:
        raise NonIntegerReciprocal(f"lambda must lie in (0, 1), got {lam}")
    inv = 1 / lam
    if inv.denominator != 1 or inv.numerator < 2:
        raise NonIntegerReciprocal(f"1/lambda must be an integer >= 2, got {inv}")
    return int(inv)


@dataclass(frozen=True)
class Tiling:
    """Partition of Q into (1/lambda)^(2*level) open squares of side lambda^level."""

    lam: Fraction
    level: int
    grid: Grid | None = None

    def __post_init__(self):
        reciprocal_of(self.lam)
        if self.level < 0:
            raise NonIntegerReciprocal(f"level must be >= 0, got {self.level}")
        if self.grid is not None and self.grid.n % self.tiles_per_side != 0:
            raise ResolutionTooCoarse(
                f"grid n={self.grid.n} not divisible by {self.tiles_per_side} tiles per side"
            )

    @property
    def tiles_per_side(self) -> int:
        return reciprocal_of(self.lam) ** self.level

    @property
    def side(self) -> Fraction:
        return self.lam**self.level

    @property
    def cells_per_tile(self) -> int:
        if self.grid is None:
            raise MisalignedTile("tiling has no grid attached")
        return self.grid.n // self.tiles_per_side

    def __len__(self) -> int:
        return self.tiles_per_side**2

    def indices(self) -> Iterator[tuple[int, int]]:
        m = self.tiles_per_side
        for i in range(m):
            for j in range(m):
                yield (i, j)

    def center(self, i: int, j: int) -> tuple[float, float]:
        s = float(self.side)
        return (X_MIN + (i + 0.5) * s, X_MIN + (j + 0.5) * s)

    def cell_slice(self, i: int, j: int) -> tuple[slice, slice]:
        c = self.cells_per_tile
        m = self.tiles_per_side
        if not (0 <= i < m and 0 <= j < m):
            raise MisalignedTile(f"tile index ({i}, {j}) outside {m}x{m} tiling")
        return (slice(i * c, (i + 1) * c), slice(j * c, (j + 1) * c))


def make_tiling(lam, level: int = 1, grid: Grid | None = None) -> Tiling:
    """Build the tiling of Q by squares of side lambda^level.

    Raises NonIntegerReciprocal unless 1/lambda is an integer >= 2, and
    ResolutionTooCoarse if a grid is attached whose cells do not tile evenly.
    """
    return Tiling(as_fraction(lam), level, grid)


# ---------------------------------------------------------------------------
# stage schedules


@dataclass(frozen=True)
class Schedule:
    """Stage boundary times T_0 = 0 < T_1 < ... under geometric dilation tau.

    T_n = sum_{i<n} tau^i; stage n occupies [T_n, T_{n+1}) with duration tau^n.
    Times stay exact (Fraction) whenever tau is exact.
    """

    tau: Fraction
    times: tuple[Fraction, ...]

    @property
    def n_stages(self) -> int:
        return len(self.times) - 1

    def T(self, n: int) -> Fraction:
        return self.times[n]

    def duration(self, n: int) -> Fraction:
        return self.times[n + 1] - self.times[n]

    def as_floats(self) -> np.ndarray:
        return np.array([float(t) for t in self.times])


def time_steps(tau, n_max: int) -> Schedule:
    """Schedule of stage boundaries T_0..T_{n_max}.

    The closed form (tau^n - 1)/(tau - 1) is asserted against the running sum
    for tau != 1; for tau = 1 the boundaries are T_n = n.
    """
    tau = as_fraction(tau)
    if tau <= 0:
        raise TauEqualsOne(f"tau must be positive, got {tau}")
    if n_max < 0:
        raise TauEqualsOne(f"n_max must be >= 0, got {n_max}")
    times = [Fraction(0)]
    acc = Fraction(0)
    for i in range(n_max):
        acc += tau**i
        times.append(acc)
    if tau != 1:
        for n, t in enumerate(times):
            assert t == (tau**n - 1) / (tau - 1)
    else:
        assert times == [Fraction(i) for i in range(n_max + 1)]
    return Schedule(tau, tuple(times))


def rescale_schedule(tau, l: int) -> tuple[Fraction, Fraction]:
    """Coarse-to-fine schedule map: tau_tilde = tau^l and the time dilation C.

    C = (1 - tau^l)/(1 - tau) satisfies C * T_tilde_n = T_{n*l} exactly.
    Raises TauEqualsOne at tau = 1 where the dilation is degenerate.
    """
    tau = as_fraction(tau)
    if tau == 1:
        raise TauEqualsOne("rescale_schedule is undefined at tau = 1")
    if l < 1:
        raise TauEqualsOne(f"l must be a positive integer, got {l}")
    tau_tilde = tau**l
    C = (1 - tau_tilde) / (1 - tau)
    return tau_tilde, C


# ---------------------------------------------------------------------------
# tracers


@dataclass(frozen=True)
class TracerField:
    """Cell-valued scalar on Q, zero-extended outside.

    Binary tracers additionally carry the level-set mask and the exact level
    pair (hi, lo) with hi = 1 and lo = -theta/(1-theta), theta = |A|.
    """

    grid: Grid
    values: np.ndarray
    mask: np.ndarray | None = None
    levels: tuple[Fraction, Fraction] | None = None

    def __post_init__(self):
        n = self.grid.n
        if self.values.shape != (n, n):
            raise MisalignedTile(
                f"values shape {self.values.shape} does not match grid n={n}"
            )

    @property
    def is_binary(self) -> bool:
        return self.mask is not None

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def mean_exact(self) -> Fraction:
        """Exact cell mean; integer-count arithmetic for binary tracers."""
        if not self.is_binary:
            raise EmptyMask("exact mean requires a binary tracer")
        n_a = int(np.count_nonzero(self.mask))
        total = self.grid.n**2
        hi, lo = self.levels
        return (hi * n_a + lo * (total - n_a)) / total

    @property
    def theta(self) -> Fraction:
        if not self.is_binary:
            raise EmptyMask("theta requires a binary tracer")
        return Fraction(int(np.count_nonzero(self.mask)), self.grid.n**2)

    def with_values(self, values: np.ndarray, mask: np.ndarray | None = None) -> "TracerField":
        return TracerField(self.grid, values, mask, self.levels if mask is not None else None)


def make_binary_tracer(mask: np.ndarray, grid: Grid) -> TracerField:
    """Mean-free binary tracer: 1 on the mask, -theta/(1-theta) elsewhere.

    theta = |A| must satisfy 0 < theta <= 1/2; the lower level then lies in
    [-1, 0) and the exact mean is zero by construction.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (grid.n, grid.n):
        raise MisalignedTile(f"mask shape {mask.shape} does not match grid n={grid.n}")
    n_a = int(np.count_nonzero(mask))
    total = grid.n**2
    if n_a == 0:
        raise EmptyMask("mask selects no cells")
    if 2 * n_a > total:
        raise MaskTooLarge(f"|A| = {Fraction(n_a, total)} exceeds 1/2")
    hi = Fraction(1)
    lo = -Fraction(n_a, total - n_a)
    values = np.where(mask, 1.0, float(lo))
    out = TracerField(grid, values, mask, (hi, lo))
    assert out.mean_exact() == 0
    return out


def half_split(grid: Grid) -> TracerField:
    """The reference initial datum: +1 on the left half {x < 0}, -1 on the right."""
    if grid.n % 2:
        raise ResolutionTooCoarse("half split needs an even grid")
    mask = np.zeros((grid.n, grid.n), dtype=bool)
    mask[: grid.n // 2, :] = True
    return make_binary_tracer(mask, grid)


def checkerboard(grid: Grid, lam) -> TracerField:
    """Alternating +-1 squares of side lambda; mean-free when 1/lambda is even."""
    inv = reciprocal_of(lam)
    if inv % 2:
        raise MaskTooLarge(f"checkerboard needs even 1/lambda for zero mean, got {inv}")
    if grid.n % inv:
        raise ResolutionTooCoarse(f"grid n={grid.n} not divisible by 1/lambda={inv}")
    c = grid.n // inv
    idx = np.arange(grid.n) // c
    parity = (idx[:, None] + idx[None, :]) % 2 == 0
    return make_binary_tracer(parity, grid)


def tile_average(rho: TracerField, tiling: Tiling, index: tuple[int, int]):
    """Exact cell-count average of the tracer over one tile.

    Returns a Fraction for binary tracers, a float otherwise. The tiling must
    be attached to the tracer's grid.
    """
    if tiling.grid is None or tiling.grid.n != rho.grid.n:
        raise MisalignedTile("tiling grid does not match tracer grid")
    sl = tiling.cell_slice(*index)
    if rho.is_binary:
        hi, lo = rho.levels
        cells = tiling.cells_per_tile**2
        n_hi = int(np.count_nonzero(rho.mask[sl]))
        return (hi * n_hi + lo * (cells - n_hi)) / cells
    return float(np.mean(rho.values[sl]))


def tile_averages(rho: TracerField, tiling: Tiling) -> np.ndarray:
    """Float array of all tile averages, shape (m, m), via exact block sums."""
    if tiling.grid is None or tiling.grid.n != rho.grid.n:
        raise MisalignedTile("tiling grid does not match tracer grid")
    m = tiling.tiles_per_side
    c = tiling.cells_per_tile
    v = rho.values.reshape(m, c, m, c)
    return v.mean(axis=(1, 3))


def tile_averages_exact(rho: TracerField, tiling: Tiling) -> list[Fraction]:
    """All tile averages as exact Fractions (binary tracers only), row-major in (i, j)."""
    return [tile_average(rho, tiling, ij) for ij in tiling.indices()]


# ---------------------------------------------------------------------------
# block parameter bundle


@dataclass(frozen=True)
class BlockParams:
    """Parameters (lambda, a, p, theta, s) of a basic mixing block plus the
    diagnostic constants (kappa, s_bar) they are scored against."""

    lam: Fraction = Fraction(1, 2)
    a: float = 0.25
    p: float = 2.0
    theta: Fraction = Fraction(1, 2)
    s: float = 2.0
    kappa: float = 1.0 / 3.0
    s_bar: float = 0.5

    def __post_init__(self):
        reciprocal_of(self.lam)
        if not (0 < self.theta <= Fraction(1, 2)):
            raise MaskTooLarge(f"theta must lie in (0, 1/2], got {self.theta}")
        if not (0 < self.a <= 1):
            raise EmptyMask(f"a must lie in (0, 1], got {self.a}")
        if self.p <= 1:
            raise MisalignedTile(f"p must exceed 1, got {self.p}")
        if self.s <= 1:
            raise MisalignedTile(f"s must exceed 1, got {self.s}")
        if not (0 < self.kappa < 1 and 0 < self.s_bar < 1):
            raise MisalignedTile("kappa and s_bar must lie in (0, 1)")

    @property
    def fill_threshold(self) -> float:
        """Unmixedness fill fraction 1 - (1-kappa)/2 * s_bar."""
        return 1.0 - (1.0 - self.kappa) / 2.0 * self.s_bar
