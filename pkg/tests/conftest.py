import numpy as np
import pytest

from mdpfold.model import ActionSet, CostSpec, Kernel, MDPModel, StateGrid
from mdpfold.remote import RemoteEstimationParams, TableNoise


def identity_model(half_range=1, n_actions=1, T=3):
    grid = StateGrid.integer(half_range)
    acts = ActionSet(tuple(range(n_actions)))
    rows = np.tile(np.eye(grid.size), (n_actions, 1, 1))
    costs = CostSpec(np.zeros((grid.size, n_actions)), np.zeros(grid.size))
    return MDPModel(grid, acts, Kernel(grid, acts, rows), costs, T)


def random_walk_rows(half_range=2, stay=0.5):
    """Symmetric walk, reflected (mass kept) at the grid edges."""
    n = 2 * half_range + 1
    rows = np.zeros((n, n))
    step = (1 - stay) / 2
    for i in range(n):
        rows[i, i] += stay
        rows[i, max(i - 1, 0)] += step
        rows[i, min(i + 1, n - 1)] += step
    return rows


def drift_rows(half_range=2):
    n = 2 * half_range + 1
    rows = np.zeros((n, n))
    for i in range(n):
        rows[i, min(i + 1, n - 1)] = 1.0
    return rows


def integer_remote_params(q=(0.0, 0.8), lam=(0.0, 1.0), noise=(0.25, 0.5, 0.25), a=1,
                          half_range=6, horizon=4, d="square"):
    return RemoteEstimationParams(a=a, noise=TableNoise(noise), lambda_=lam, q=q, d=d,
                                  grid=StateGrid.integer(half_range), horizon=horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
