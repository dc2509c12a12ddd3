"""Accelerated monotone dynamic program, discounted value iteration, and
randomized-action kernels."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadDiscount, MaxIterExceeded, NonIntegerGrid, OutOfRange, ValidationError
from .model import INTEGER, ActionSet, CostSpec, Kernel
from .solve import TIE_TOL, SolveResult, _check_horizon, continuation, select_actions


@dataclass(frozen=True, eq=False)
class MonotoneSolveResult(SolveResult):
    """SolveResult whose Q-tables hold NaN where an entry was never evaluated.

    ``baseline_evaluations`` is what an unpruned sweep over the same
    nonnegative states would cost per stage; the full solver's own count in
    ``SolveResult.q_evaluations`` covers every state.
    """

    baseline_evaluations: tuple = ()


def monotone_solve(model, T: int = None, tie_tol: float = TIE_TOL) -> MonotoneSolveResult:
    """Backward induction that exploits an even, quasi-convex strategy.

    At each stage the nonnegative states are swept upward from 0; state
    ``x`` only evaluates actions at or above the one chosen at ``x - 1``,
    keeps the largest minimizer, and copies value and action to ``-x``.
    The result is exact only when the optimal strategy really has that
    shape (e.g. under C1-C5); this function does not check.
    """
    if model.grid.kind != INTEGER:
        raise NonIntegerGrid("monotone_solve needs an integer state grid")
    T = _check_horizon(model, T)
    grid = model.grid
    rows = model.kernel.rows
    n, m = grid.size, rows.shape[0]
    z = grid.zero_index

    values = np.empty((T, n))
    q_tables = np.full((T - 1, n, m), np.nan)
    policy = np.empty((T - 1, n), dtype=int)
    counts = []
    values[T - 1] = model.costs.terminal
    for t in range(T - 1, 0, -1):
        cost = model.costs.stage_cost(t)
        v_next = values[t]
        w = 0
        count = 0
        for i in range(z, n):
            q = np.array([cost[i, u] + rows[u, i] @ v_next for u in range(w, m)])
            count += q.size
            vmin = q.min()
            g = w + int(np.flatnonzero(q <= vmin + tie_tol)[-1])
            j = grid.mirror(i)
            values[t - 1, i] = values[t - 1, j] = vmin
            policy[t - 1, i] = policy[t - 1, j] = g
            q_tables[t - 1, i, w:] = q_tables[t - 1, j, w:] = q
            w = g
        counts.append(count)
    for arr in (values, q_tables, policy):
        arr.setflags(write=False)
    return MonotoneSolveResult(T, grid.points, model.actions.array, values, q_tables, policy,
                               tuple(reversed(counts)), tuple([(n - z) * m] * (T - 1)))


@dataclass(frozen=True, eq=False)
class DiscountedResult:
    beta: float
    points: np.ndarray
    actions: np.ndarray
    value: np.ndarray
    policy_index: np.ndarray
    iterations: int
    residual: float
    stop_threshold: float
    converged: bool
    changes: tuple = field(repr=False, default=())

    @property
    def policy(self) -> np.ndarray:
        return self.actions[self.policy_index]


def value_iteration(model, beta: float, tol: float = 1e-8, max_iter: int = 10_000,
                    tie_tol: float = TIE_TOL) -> DiscountedResult:
    """Iterate ``V <- min_u [c(x,u) + beta * sum_y p(y|x;u) V(y)]`` from ``V = 0``.

    Stops once the sup-norm change is at most ``tol * (1 - beta) / (2 * beta)``,
    which makes the greedy policy ``tol``-optimal.  If ``max_iter`` is hit
    first, a MaxIterExceeded warning is issued and the last iterate is
    returned with ``converged=False``.
    """
    if not 0 < beta < 1:
        raise BadDiscount(f"discount must lie in (0, 1), got {beta}")
    if not model.costs.homogeneous:
        tabs = model.costs.tables
        if any(not np.array_equal(tabs[0], tb) for tb in tabs[1:]):
            raise ValidationError("value iteration needs a time-homogeneous cost")
    cost = model.costs.tables[0]
    rows = model.kernel.rows
    points = model.grid.points
    threshold = tol * (1 - beta) / (2 * beta)

    v = np.zeros(points.size)
    changes = []
    converged = False
    for it in range(1, max_iter + 1):
        v_new = (cost + beta * continuation(rows, v)).min(axis=1)
        change = float(np.max(np.abs(v_new - v)))
        changes.append(change)
        v = v_new
        if change <= threshold:
            converged = True
            break
    if not converged:
        warnings.warn(f"value iteration stopped after {max_iter} iterations "
                      f"with change {changes[-1]:.3g} > {threshold:.3g}", MaxIterExceeded)
    _, pol = select_actions(cost + beta * continuation(rows, v), points, tie_tol)
    v.setflags(write=False)
    return DiscountedResult(beta, points, model.actions.array, v, pol, len(changes),
                            changes[-1], threshold, converged, tuple(changes))


def _linear(s):
    return s


@dataclass(frozen=True)
class MixingFunction:
    """Weight ``theta`` on the upper action of an adjacent pair ``(u, u_next)``.

    ``fn`` maps the relative position ``s = (w - u) / (u_next - u)`` in
    ``[0, 1]`` to a weight; it must be nondecreasing with ``fn(0) = 0`` and
    ``fn(1) = 1``.  The default is linear.
    """

    fn: Callable[[float], float] = _linear

    def __post_init__(self):
        s = np.linspace(0.0, 1.0, 101)
        vals = np.array([self.fn(x) for x in s], dtype=float)
        if abs(vals[0]) > 1e-12 or abs(vals[-1] - 1) > 1e-12:
            raise ValidationError("mixing function must map 0 -> 0 and 1 -> 1")
        if np.any(np.diff(vals) < -1e-12):
            raise ValidationError("mixing function must be nondecreasing")

    def __call__(self, w, lo, hi):
        return float(self.fn((w - lo) / (hi - lo)))


def _bracket(w, acts):
    """``(k, theta_arg)`` such that ``acts[k] <= w <= acts[k+1]``; exact hits give ``(k, None)``."""
    if w < acts[0] or w > acts[-1]:
        raise OutOfRange(f"{w} outside [{acts[0]}, {acts[-1]}]")
    hit = np.flatnonzero(acts == w)
    if hit.size:
        return int(hit[0]), None
    k = int(np.searchsorted(acts, w)) - 1
    return k, (w, acts[k], acts[k + 1])


def _interpolate(table, acts, theta, w_grid):
    out = []
    for w in w_grid:
        k, pos = _bracket(float(w), acts)
        if pos is None:
            out.append(table[k])
        else:
            th = theta(*pos)
            out.append((1 - th) * table[k] + th * table[k + 1])
    return out


def _w_values(w_grid):
    ws = np.unique(np.asarray(w_grid, dtype=float))
    if ws.size == 0:
        raise ValidationError("empty w_grid")
    return ws


def randomize_kernel(kernel: Kernel, theta: MixingFunction = None,
                     w_grid: Sequence[float] = ()) -> Kernel:
    """Kernel over the enlarged action set ``w_grid``.

    For ``w`` strictly between adjacent actions ``u < u'`` the row is
    ``(1 - theta) p(u) + theta p(u')``; at an original action it is ``p(u)``.
    """
    theta = theta or MixingFunction()
    acts = kernel.actions.array
    ws = _w_values(w_grid)
    rows = np.stack(_interpolate(kernel.rows, acts, theta, ws))
    return Kernel(kernel.grid, ActionSet(tuple(ws)), rows)


def randomize_cost(costs: CostSpec, actions, theta: MixingFunction = None,
                   w_grid: Sequence[float] = ()) -> CostSpec:
    """Interpolate cost columns the same way ``randomize_kernel`` mixes rows."""
    theta = theta or MixingFunction()
    acts = np.asarray(tuple(actions), dtype=float)
    ws = _w_values(w_grid)

    def enlarge(tab):
        return np.stack(_interpolate(tab.T, acts, theta, ws), axis=1)

    stage = enlarge(costs.stage) if costs.homogeneous else [enlarge(s) for s in costs.stage]
    return CostSpec(stage, costs.terminal)


def gap_grid(actions, points_per_gap: int = 11) -> np.ndarray:
    """``points_per_gap`` evenly spaced values in each gap between adjacent actions."""
    acts = np.asarray(tuple(actions), dtype=float)
    parts = [np.linspace(lo, hi, points_per_gap) for lo, hi in zip(acts[:-1], acts[1:])]
    return np.unique(np.concatenate(parts)) if parts else acts
