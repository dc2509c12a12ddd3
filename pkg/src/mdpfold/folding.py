"""Folding of densities, kernels and whole MDPs onto the nonnegative half-grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotEven, NotNormalized
from .model import CostSpec, FoldedGrid, Kernel, MDPModel, ROW_TOL, StateGrid
from .solve import TIE_TOL, select_actions, solve_finite_horizon
from .structure import EPS, full_report


def fold_density(pi, tol: float = ROW_TOL) -> np.ndarray:
    """Fold a mass vector on ``{-a, ..., a}`` onto ``{0, ..., a}``.

    The mass at 0 is kept once; ``x > 0`` receives ``pi(x) + pi(-x)``.
    """
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size % 2 == 0:
        raise ValueError("density must be a vector over a symmetric grid")
    if abs(pi.sum() - 1.0) > tol:
        raise NotNormalized(f"density sums to {pi.sum()!r}")
    return _fold_last_axis(pi)


def _fold_last_axis(a):
    z = a.shape[-1] // 2
    out = a[..., z:].copy()
    out[..., 1:] += a[..., :z][..., ::-1]
    return out


def fold_kernel(kernel: Kernel) -> Kernel:
    """Fold every row at a nonnegative state; rows at negative states are dropped."""
    grid = kernel.grid
    if not isinstance(grid, StateGrid):
        raise TypeError("only kernels on a symmetric grid can be folded")
    rows = kernel.rows[:, grid.zero_index:, :]
    return Kernel(FoldedGrid.of(grid), kernel.actions, _fold_last_axis(rows))


@dataclass(frozen=True, eq=False)
class FoldedModel:
    grid: FoldedGrid
    actions: object
    kernel: Kernel
    costs: CostSpec
    horizon: Optional[int] = None
    name: str = ""

    @property
    def points(self):
        return self.grid.points


def fold_mdp(model: MDPModel, tol: float = EPS) -> FoldedModel:
    """Folded MDP on the nonnegative states.

    Raises NotEven unless the costs (A1) and the kernel (A2) are even.
    """
    if not isinstance(model, MDPModel):
        raise TypeError(f"can only fold an MDPModel, not {type(model).__name__}")
    report = full_report(model, tol)
    if not report.holds("A1", "A2"):
        bad = [f"{k} violated {report.verdicts[k].witness}" for k in ("A1", "A2")
               if not report.verdicts[k]]
        raise NotEven("; ".join(bad), report)
    z = model.grid.zero_index
    costs = model.costs
    stage = costs.stage[z:] if costs.homogeneous else [s[z:] for s in costs.stage]
    folded_costs = CostSpec(stage, costs.terminal[z:])
    return FoldedModel(FoldedGrid.of(model.grid), model.actions, fold_kernel(model.kernel),
                       folded_costs, model.horizon, model.name)


@dataclass(frozen=True)
class FoldingEquivalence:
    holds: bool
    max_q_deviation: float
    max_v_deviation: float
    policies_match: bool
    first_policy_mismatch: Optional[tuple] = None


def check_folding_equivalence(model: MDPModel, T: int = None, tol: float = 1e-8,
                              tie_tol: float = TIE_TOL) -> FoldingEquivalence:
    """Solve the model and its fold and compare Q, V and the strategies.

    The folded strategy is read back at ``x < 0`` with the same
    sign-dependent tie-break the full solver applies there, i.e. as the
    smallest minimizer of the folded Q-row at ``|x|``.  Without ties this is
    plain equality ``g(x) == g_folded(|x|)``.
    """
    folded = fold_mdp(model)
    full = solve_finite_horizon(model, T, tie_tol)
    half = solve_finite_horizon(folded, full.horizon, tie_tol)
    z = model.grid.zero_index
    absidx = np.abs(np.arange(model.grid.size) - z)

    v_dev = float(np.max(np.abs(full.values - half.values[:, absidx])))
    q_unfolded = half.q_tables[:, absidx, :]
    q_dev = float(np.max(np.abs(full.q_tables - q_unfolded))) if full.horizon > 1 else 0.0

    points = model.grid.points
    mismatch = None
    for t in range(full.horizon - 1):
        _, expected = select_actions(q_unfolded[t], points, tie_tol)
        bad = np.flatnonzero(expected != full.policy_index[t])
        if bad.size:
            i = bad[0]
            mismatch = (t + 1, float(points[i]), float(full.policy[t, i]),
                        float(model.actions.values[expected[i]]))
            break
    ok = mismatch is None
    return FoldingEquivalence(ok and max(v_dev, q_dev) <= tol, q_dev, v_dev, ok, mismatch)
