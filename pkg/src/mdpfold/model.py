"""Core data model: symmetric state grids, action sets, kernels and costs.

States live on a uniform grid symmetric about zero.  Grid index ``i`` and
``size - 1 - i`` are mirror images, so negating the state is reversing an
array along the state axis.  Kernels are stored dense as mass tables of shape
``(n_actions, n_states, n_states)`` with ``rows[u, x, y] = Pr(y | x; u)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    AsymmetricGrid,
    DimensionMismatch,
    RowNotStochastic,
    ValidationError,
)

ROW_TOL = 1e-9

INTEGER = "integer"
CONTINUOUS = "continuous-sampled"
GRID_KINDS = (INTEGER, CONTINUOUS)


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _cells(half_range, step):
    ratio = half_range / step
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise AsymmetricGrid(
            f"half_range {half_range} is not a positive multiple of step {step}")
    return n


@dataclass(frozen=True)
class StateGrid:
    """Uniform grid on ``[-half_range, half_range]`` (or ``{-a, ..., a}``)."""

    kind: str
    half_range: float
    step: float = 1.0

    def __post_init__(self):
        if self.kind not in GRID_KINDS:
            raise ValidationError(f"unknown grid kind {self.kind!r}")
        if not (self.step > 0 and self.half_range > 0):
            raise ValidationError("half_range and step must be positive")
        if self.kind == INTEGER and (self.step != 1 or self.half_range != int(self.half_range)):
            raise ValidationError("integer grids need step 1 and an integer half_range")
        _cells(self.half_range, self.step)

    @classmethod
    def integer(cls, half_range: int) -> "StateGrid":
        return cls(INTEGER, int(half_range), 1.0)

    @classmethod
    def continuous(cls, half_range: float, step: float) -> "StateGrid":
        return cls(CONTINUOUS, float(half_range), float(step))

    @classmethod
    def from_points(cls, points: Sequence[float], kind: Optional[str] = None) -> "StateGrid":
        """Recover a grid from explicit coordinates, checking symmetry."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 3 or pts.size % 2 == 0:
            raise AsymmetricGrid("a symmetric grid has an odd number (>= 3) of points")
        steps = np.diff(pts)
        step = float(steps[0])
        if step <= 0 or not np.allclose(steps, step, rtol=0, atol=1e-9 * max(1.0, step)):
            raise AsymmetricGrid("grid points must be strictly increasing and uniformly spaced")
        if not np.allclose(pts, -pts[::-1], rtol=0, atol=1e-9 * max(1.0, abs(pts).max())):
            raise AsymmetricGrid("grid is not symmetric about 0")
        if kind is None:
            kind = INTEGER if step == 1 and np.all(pts == np.round(pts)) else CONTINUOUS
        return cls(kind, float(pts[-1]), step)

    @cached_property
    def n_positive(self) -> int:
        return _cells(self.half_range, self.step)

    @property
    def size(self) -> int:
        return 2 * self.n_positive + 1

    @property
    def zero_index(self) -> int:
        return self.n_positive

    @cached_property
    def points(self) -> np.ndarray:
        n = self.n_positive
        return _readonly(np.arange(-n, n + 1) * self.step)

    @cached_property
    def nonneg_points(self) -> np.ndarray:
        return self.points[self.zero_index:]

    def mirror(self, i: int) -> int:
        return self.size - 1 - i

    def index_of(self, x: float) -> int:
        i = int(round(x / self.step)) + self.n_positive
        if not 0 <= i < self.size or abs(self.points[i] - x) > 1e-9 * max(1.0, self.step):
            raise KeyError(f"{x} is not a grid point")
        return i


@dataclass(frozen=True)
class FoldedGrid:
    """The nonnegative half ``{0, step, ..., half_range}`` of a StateGrid."""

    kind: str
    half_range: float
    step: float = 1.0

    @classmethod
    def of(cls, grid: StateGrid) -> "FoldedGrid":
        return cls(grid.kind, grid.half_range, grid.step)

    @cached_property
    def n_positive(self) -> int:
        return _cells(self.half_range, self.step)

    @property
    def size(self) -> int:
        return self.n_positive + 1

    @property
    def zero_index(self) -> int:
        return 0

    @cached_property
    def points(self) -> np.ndarray:
        return _readonly(np.arange(self.n_positive + 1) * self.step)

    @property
    def nonneg_points(self) -> np.ndarray:
        return self.points

    def index_of(self, x: float) -> int:
        i = int(round(x / self.step))
        if not 0 <= i < self.size or abs(self.points[i] - x) > 1e-9 * max(1.0, self.step):
            raise KeyError(f"{x} is not a grid point")
        return i


Grid = Union[StateGrid, FoldedGrid]


@dataclass(frozen=True)
class ActionSet:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValidationError("action set is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError("actions must be strictly ascending")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @cached_property
    def array(self) -> np.ndarray:
        return _readonly(self.values)

    def index(self, label: float) -> int:
        return self.values.index(float(label))


def _check_rows(rows, tol=ROW_TOL):
    if not np.all(np.isfinite(rows)):
        raise ValidationError("kernel contains non-finite entries")
    if np.any(rows < 0):
        u, x, y = np.argwhere(rows < 0)[0]
        raise ValidationError(f"negative kernel entry at action {u}, state {x}, next {y}")
    sums = rows.sum(axis=-1)
    dev = np.abs(sums - 1.0)
    if np.any(dev >= tol):
        u, x = np.argwhere(dev >= tol)[0]
        raise RowNotStochastic(
            f"row (action index {u}, state index {x}) sums to {sums[u, x]!r}")
    # leave rounding-level deviations alone so rows that are copied around stay bit-identical
    off = dev > 64 * np.finfo(float).eps
    if np.any(off):
        rows = rows.copy()
        rows[off] /= sums[off][:, None]
    return rows


@dataclass(frozen=True, eq=False)
class Kernel:
    """Controlled transition masses ``rows[u, x, y]`` on ``grid``."""

    grid: Grid
    actions: ActionSet
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        n = self.grid.size
        if rows.shape != (len(self.actions), n, n):
            raise DimensionMismatch(
                f"kernel shape {rows.shape} != {(len(self.actions), n, n)}")
        object.__setattr__(self, "rows", _readonly(_check_rows(rows)))

    def __getitem__(self, u_index):
        return self.rows[u_index]


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Stage costs ``c_t(x, u)`` and terminal cost ``c_T(x)``.

    ``stage`` is either a single ``(n_states, n_actions)`` table reused at
    every stage, or a sequence of such tables for ``t = 1, 2, ...``.
    """

    stage: Union[np.ndarray, Sequence[np.ndarray]]
    terminal: np.ndarray

    def __post_init__(self):
        stage = self.stage
        if isinstance(stage, np.ndarray) and stage.ndim == 2:
            tables = _readonly(stage)
        else:
            tables = tuple(_readonly(s) for s in stage)
            if not tables:
                raise ValidationError("no stage costs given")
        object.__setattr__(self, "stage", tables)
        object.__setattr__(self, "terminal", _readonly(self.terminal))
        for tab in self.tables:
            if not np.all(np.isfinite(tab)):
                raise ValidationError("stage cost contains non-finite entries")
        if not np.all(np.isfinite(self.terminal)):
            raise ValidationError("terminal cost contains non-finite entries")

    @property
    def homogeneous(self) -> bool:
        return isinstance(self.stage, np.ndarray)

    @property
    def tables(self) -> tuple:
        return (self.stage,) if self.homogeneous else self.stage

    @property
    def n_stages(self) -> Optional[int]:
        return None if self.homogeneous else len(self.stage)

    def stage_cost(self, t: int) -> np.ndarray:
        """Cost table for stage ``t`` (1-based)."""
        if self.homogeneous:
            return self.stage
        if not 1 <= t <= len(self.stage):
            raise ValidationError(f"no stage cost for t={t}")
        return self.stage[t - 1]


@dataclass(frozen=True, eq=False)
class MDPModel:
    grid: StateGrid
    actions: ActionSet
    kernel: Kernel
    costs: CostSpec
    horizon: Optional[int] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        _check_consistent(self.grid, self.actions, self.kernel, self.costs)
        if not isinstance(self.grid, StateGrid):
            raise AsymmetricGrid("MDPModel needs a symmetric StateGrid")

    @property
    def points(self) -> np.ndarray:
        return self.grid.points


def _check_consistent(grid, actions, kernel, costs):
    if kernel.grid != grid:
        raise DimensionMismatch("kernel grid differs from model grid")
    if kernel.actions != actions:
        raise DimensionMismatch("kernel actions differ from model actions")
    shape = (grid.size, len(actions))
    for t, tab in enumerate(costs.tables, start=1):
        if tab.shape != shape:
            raise DimensionMismatch(f"stage cost table {t} has shape {tab.shape}, expected {shape}")
    if costs.terminal.shape != (grid.size,):
        raise DimensionMismatch(
            f"terminal cost has shape {costs.terminal.shape}, expected {(grid.size,)}")


def build_model(grid, actions, kernel, costs, horizon=None, name="") -> MDPModel:
    """Validate and assemble an MDP.

    ``actions`` may be an ActionSet or a sequence of labels, ``kernel`` a
    Kernel or a raw ``(n_actions, n, n)`` array, ``costs`` a CostSpec or a
    ``(stage, terminal)`` pair.  Rows within 1e-9 of stochastic are rescaled;
    anything further off raises RowNotStochastic.
    """
    if not isinstance(grid, StateGrid):
        grid = StateGrid.from_points(grid)
    if not isinstance(actions, ActionSet):
        actions = ActionSet(tuple(actions))
    if not isinstance(kernel, Kernel):
        kernel = Kernel(grid, actions, np.asarray(kernel, dtype=float))
    if not isinstance(costs, CostSpec):
        stage, terminal = costs
        costs = CostSpec(stage, terminal)
    if horizon is not None and (int(horizon) != horizon or horizon < 2):
        raise ValidationError(f"horizon must be an integer >= 2, got {horizon}")
    return MDPModel(grid, actions, kernel, costs,
                    None if horizon is None else int(horizon), name)


def even_extension(half: np.ndarray) -> np.ndarray:
    """Extend values on ``{0, ..., a}`` (axis 0) to ``{-a, ..., a}``."""
    half = np.asarray(half, dtype=float)
    return np.concatenate([half[:0:-1], half], axis=0)


def format_number(v: float) -> str:
    return "%.12g" % v


def grid_decimals(step: float) -> int:
    """Number of decimals needed to print grid coordinates of spacing ``step``."""
    return max(0, -int(math.floor(math.log10(step) + 1e-12)))
