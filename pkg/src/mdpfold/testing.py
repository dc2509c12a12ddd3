"""Random instance generators for property tests and acceptance runs."""
from __future__ import annotations

import numpy as np

from .model import ActionSet, CostSpec, Kernel, MDPModel, StateGrid


def _tails_to_masses(tails):
    """Masses on ``0..a`` from tail probabilities ``Pr(Y >= y)`` (``tails[..., 0] == 1``)."""
    nxt = np.concatenate([tails[..., 1:], np.zeros(tails.shape[:-1] + (1,))], axis=-1)
    return np.clip(tails - nxt, 0.0, None)


def random_monotone_folded_rows(rng, half_range, n_actions, concentration=1.0):
    """Folded rows ``nu[u, x, y]`` on ``0..a`` whose tails are nondecreasing in
    ``x`` and whose ``x``-increments shrink as ``u`` grows.

    Each row is ``alpha_u * mu0 + (1 - alpha_u) * rho(x)`` with ``rho``
    stochastically increasing in ``x`` and ``alpha_u`` increasing in ``u``.
    """
    n = half_range + 1
    raw = rng.dirichlet(np.full(n, concentration), size=n)
    tails = np.cumsum(raw[:, ::-1], axis=1)[:, ::-1]
    tails = np.maximum.accumulate(tails, axis=0)      # running max over x
    rho = _tails_to_masses(tails)
    mu0 = rng.dirichlet(np.full(n, concentration))
    alpha = np.sort(rng.uniform(0, 1, n_actions))
    alpha[0] = rng.uniform(0, alpha[0]) if n_actions > 1 else alpha[0]
    rows = alpha[:, None, None] * mu0[None, None, :] + (1 - alpha)[:, None, None] * rho[None]
    return rows / rows.sum(axis=-1, keepdims=True)


def unfold_rows(rng, folded_rows):
    """Even kernel rows on ``-a..a`` whose fold is ``folded_rows``.

    Mass at ``|y| > 0`` is split randomly between ``+y`` and ``-y``, except
    in the row at ``x = 0`` where evenness forces an equal split.
    """
    m, n, _ = folded_rows.shape
    a = n - 1
    size = 2 * a + 1
    z = a
    rows = np.zeros((m, size, size))
    split = rng.uniform(0, 1, (m, n, a))
    split[:, 0, :] = 0.5
    for i in range(n):
        nu = folded_rows[:, i, :]
        rows[:, z + i, z] = nu[:, 0]
        rows[:, z + i, z + 1:] = split[:, i, :] * nu[:, 1:]
        rows[:, z + i, :z] = ((1 - split[:, i, :]) * nu[:, 1:])[:, ::-1]
    rows[:, :z, :] = rows[:, :z:-1, ::-1]
    return rows


def random_even_qc(rng, half_range, scale=1.0):
    """Even, quasi-convex vector on ``-a..a`` with a random level at 0."""
    inc = rng.exponential(scale, half_range)
    half = rng.uniform(0, scale) + np.concatenate([[0.0], np.cumsum(inc)])
    return np.concatenate([half[:0:-1], half])


def random_c1c5_costs(rng, half_range, n_actions):
    """Stage cost ``c(x, u) = h_u + sum_{k <= |x|} delta_u(k)`` with ``h_u``
    increasing and ``delta_u(k) >= 0`` decreasing in ``u``: even, quasi-convex
    in ``x`` and submodular."""
    base = rng.exponential(1.0, half_range)
    shrink = np.cumprod(np.concatenate([[1.0], rng.uniform(0.2, 1.0, n_actions - 1)]))
    deltas = base[None, :] * shrink[:, None] * rng.uniform(0.8, 1.0, (n_actions, half_range))
    deltas = np.minimum.accumulate(deltas, axis=0)     # keep decreasing in u
    h = np.cumsum(rng.exponential(1.0, n_actions)) - rng.exponential(1.0)
    half = h[None, :] + np.vstack([np.zeros(n_actions), np.cumsum(deltas.T, axis=0)])
    return np.vstack([half[:0:-1], half])


def random_c1c5_model(rng, half_range: int = 5, n_actions: int = 3, T: int = 5) -> MDPModel:
    """Random integer-grid model built to satisfy C1-C5.

    Stage costs differ per stage; the terminal cost is even and quasi-convex.
    """
    grid = StateGrid.integer(half_range)
    actions = ActionSet(tuple(range(n_actions)))
    rows = unfold_rows(rng, random_monotone_folded_rows(rng, half_range, n_actions))
    kernel = Kernel(grid, actions, rows)
    stages = [random_c1c5_costs(rng, half_range, n_actions) for _ in range(T - 1)]
    costs = CostSpec(stages, random_even_qc(rng, half_range))
    return MDPModel(grid, actions, kernel, costs, T, "random-c1c5")


def random_even_kernel(rng, half_range: int = 5, n_actions: int = 3) -> Kernel:
    """Even kernel with no further structure."""
    n = half_range + 1
    folded = rng.dirichlet(np.ones(n), size=(n_actions, n))
    rows = unfold_rows(rng, folded)
    return Kernel(StateGrid.integer(half_range), ActionSet(tuple(range(n_actions))), rows)


def random_even_unimodal_density(rng, max_support: int = 5) -> np.ndarray:
    """Even density on ``{-m..m}`` (``m`` random, at most ``max_support``)
    that is nonincreasing in ``|k|``."""
    m = int(rng.integers(0, max_support + 1))
    half = np.sort(rng.uniform(0.05, 1.0, m + 1))[::-1]
    full = np.concatenate([half[:0:-1], half])
    return full / full.sum()
