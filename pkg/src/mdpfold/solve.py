"""Exact backward induction with the sign-dependent tie-break.

Among minimizing actions, a state ``x >= 0`` takes the largest and a state
``x < 0`` the smallest.  Q-values within ``TIE_TOL`` of the row minimum count
as minimizers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import HorizonTooShort, UndefinedAction, ValidationError

TIE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Tables indexed by stage ``t = 1..T`` at array position ``t - 1``.

    values:       (T, n_states)
    q_tables:     (T - 1, n_states, n_actions)
    policy:       (T - 1, n_states) action labels
    policy_index: (T - 1, n_states) action indices
    q_evaluations: number of Q(x, u) entries computed at each stage 1..T-1
    """

    horizon: int
    points: np.ndarray
    actions: np.ndarray
    values: np.ndarray
    q_tables: np.ndarray
    policy_index: np.ndarray
    q_evaluations: tuple

    @property
    def policy(self) -> np.ndarray:
        return self.actions[self.policy_index]

    def V(self, t: int) -> np.ndarray:
        return self.values[t - 1]

    def Q(self, t: int) -> np.ndarray:
        return self.q_tables[t - 1]

    def g(self, t: int) -> np.ndarray:
        return self.policy[t - 1]


def select_actions(q: np.ndarray, points: np.ndarray, tie_tol: float = TIE_TOL):
    """Row minima of ``q`` and the tie-broken minimizing action indices."""
    vmin = q.min(axis=1)
    ties = q <= vmin[:, None] + tie_tol
    n_act = q.shape[1]
    largest = n_act - 1 - np.argmax(ties[:, ::-1], axis=1)
    smallest = np.argmax(ties, axis=1)
    return vmin, np.where(points >= 0, largest, smallest)


def _check_horizon(model, T):
    if T is None:
        T = model.horizon
    if T is None or int(T) != T or T < 2:
        raise HorizonTooShort(f"horizon must be an integer >= 2, got {T}")
    T = int(T)
    n = model.costs.n_stages
    if n is not None and n < T - 1:
        raise ValidationError(f"costs cover {n} stages, horizon {T} needs {T - 1}")
    return T


def continuation(rows: np.ndarray, v_next: np.ndarray) -> np.ndarray:
    """``sum_y p(y|x;u) v_next(y)`` as an ``(n_states, n_actions)`` table."""
    return np.stack([rows[u] @ v_next for u in range(rows.shape[0])], axis=1)


def solve_finite_horizon(model, T: int = None, tie_tol: float = TIE_TOL) -> SolveResult:
    """Backward induction over stages ``T-1, ..., 1``.

    Works for any model exposing ``grid.points``, ``kernel.rows`` and
    ``costs`` (full or folded).  ``T`` defaults to ``model.horizon``.
    """
    T = _check_horizon(model, T)
    points = model.grid.points
    rows = model.kernel.rows
    n, m = points.size, rows.shape[0]

    values = np.empty((T, n))
    q_tables = np.empty((T - 1, n, m))
    policy = np.empty((T - 1, n), dtype=int)
    values[T - 1] = model.costs.terminal
    for t in range(T - 1, 0, -1):
        q = model.costs.stage_cost(t) + continuation(rows, values[t])
        values[t - 1], policy[t - 1] = select_actions(q, points, tie_tol)
        q_tables[t - 1] = q
    for arr in (values, q_tables, policy):
        arr.setflags(write=False)
    return SolveResult(T, points, model.actions.array, values, q_tables, policy,
                       tuple([n * m] * (T - 1)))


def policy_indices(policy, actions) -> np.ndarray:
    """Map a table of action labels to action indices."""
    labels = np.asarray(policy, dtype=float)
    acts = np.asarray(actions, dtype=float)
    idx = np.searchsorted(acts, labels)
    idx = np.clip(idx, 0, acts.size - 1)
    bad = acts[idx] != labels
    if np.any(bad):
        raise UndefinedAction(f"policy selects action {labels[bad][0]!r} not in {tuple(acts)}")
    return idx


def evaluate_policy(model, T: int, policy: Sequence) -> np.ndarray:
    """Expected cost-to-go tables ``(T, n_states)`` of a fixed Markov policy.

    ``policy[t-1][x]`` is the action label used at stage ``t`` in state index ``x``.
    """
    T = _check_horizon(model, T)
    policy = np.asarray(policy, dtype=float)
    n = model.grid.size
    if policy.shape != (T - 1, n):
        raise ValidationError(f"policy shape {policy.shape} != {(T - 1, n)}")
    idx = policy_indices(policy, model.actions.array)
    rows = model.kernel.rows
    states = np.arange(n)
    values = np.empty((T, n))
    values[T - 1] = model.costs.terminal
    for t in range(T - 1, 0, -1):
        cont = continuation(rows, values[t])
        values[t - 1] = (model.costs.stage_cost(t)[states, idx[t - 1]]
                         + cont[states, idx[t - 1]])
    return values
