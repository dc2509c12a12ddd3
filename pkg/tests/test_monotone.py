import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdpfold.errors import BadDiscount, MaxIterExceeded, NonIntegerGrid, OutOfRange, ValidationError
from mdpfold.model import ActionSet, CostSpec, Kernel, MDPModel, StateGrid
from mdpfold.monotone import (
    MixingFunction,
    gap_grid,
    monotone_solve,
    randomize_cost,
    randomize_kernel,
    value_iteration,
)
from mdpfold.remote import build_remote_model, counterexample_m2, fig1_params, remote_costs, remote_kernel
from mdpfold.solve import solve_finite_horizon
from mdpfold.structure import check_C3, check_C4, check_C5, compute_S, is_even_kernel, is_quasi_convex_even
from mdpfold.testing import random_c1c5_model

from conftest import identity_model, integer_remote_params, random_walk_rows


def assert_same(a, b):
    assert np.max(np.abs(a.values - b.values)) <= 1e-12
    assert np.array_equal(a.policy_index, b.policy_index)


# --- monotone dynamic program ----------------------------------------------

def test_single_action_matches_and_cannot_prune():
    g = StateGrid.integer(3)
    a = ActionSet((0,))
    k = Kernel(g, a, random_walk_rows(3)[None])
    m = MDPModel(g, a, k, CostSpec(np.abs(g.points)[:, None], g.points ** 2), 4)
    mono = monotone_solve(m)
    assert_same(mono, solve_finite_horizon(m))
    assert mono.q_evaluations == mono.baseline_evaluations


def test_integer_remote_model_matches_with_savings():
    model, _ = build_remote_model(integer_remote_params(q=(0.0, 0.8), lam=(0.0, 1.0), half_range=8))
    mono = monotone_solve(model)
    full = solve_finite_horizon(model)
    assert_same(mono, full)
    assert any(len(set(p)) > 1 for p in full.policy_index)
    for m_count, base, f_count in zip(mono.q_evaluations, mono.baseline_evaluations,
                                      full.q_evaluations):
        assert m_count < base < f_count


def test_unevaluated_q_entries_are_nan():
    model, _ = build_remote_model(integer_remote_params(half_range=8))
    mono = monotone_solve(model)
    assert np.isnan(mono.q_tables).any()


def test_m2_model_breaks_monotone_solver():
    ex = counterexample_m2()
    mono = monotone_solve(ex.model)
    assert not np.array_equal(mono.policy_index, ex.solution.policy_index)


def test_monotone_needs_integer_grid():
    model, _ = build_remote_model(fig1_params(half_range=1.0, step=0.1, horizon=2))
    with pytest.raises(NonIntegerGrid):
        monotone_solve(model)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_matches_full_on_c1c5_models(seed):
    m = random_c1c5_model(np.random.default_rng(seed))
    assert_same(monotone_solve(m), solve_finite_horizon(m))


# --- value iteration ---------------------------------------------------------

def test_vi_zero_cost_one_iteration():
    res = value_iteration(identity_model(half_range=2, n_actions=2), 0.9)
    assert res.iterations == 1 and res.converged and np.all(res.value == 0)


def test_vi_unit_cost_geometric_series():
    g = StateGrid.integer(1)
    a = ActionSet((0,))
    m = MDPModel(g, a, Kernel(g, a, np.eye(3)[None]), CostSpec(np.ones((3, 1)), np.zeros(3)))
    res = value_iteration(m, 0.8, tol=1e-10)
    assert np.allclose(res.value, 1 / (1 - 0.8), atol=1e-10)


def test_vi_contraction():
    model, _ = build_remote_model(integer_remote_params(half_range=8))
    res = value_iteration(model, 0.9)
    ch = np.asarray(res.changes)
    assert np.all(ch[1:] <= 0.9 * ch[:-1] + 1e-12)
    assert res.residual <= res.stop_threshold


def test_vi_remote_model_quasi_convex():
    model, _ = build_remote_model(integer_remote_params(q=(0.0, 0.5, 0.9), lam=(0.0, 0.5, 2.0),
                                                        half_range=8))
    res = value_iteration(model, 0.9)
    assert res.converged
    assert is_quasi_convex_even(res.value, model.grid)
    assert is_quasi_convex_even(res.policy, model.grid)


def test_vi_bad_discount():
    for beta in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(BadDiscount):
            value_iteration(identity_model(), beta)


def test_vi_max_iter_warns():
    model, _ = build_remote_model(integer_remote_params(half_range=8))
    with pytest.warns(MaxIterExceeded):
        res = value_iteration(model, 0.99, max_iter=5)
    assert not res.converged and res.iterations == 5


def test_vi_needs_homogeneous_cost():
    m = random_c1c5_model(np.random.default_rng(0))
    with pytest.raises(ValidationError):
        value_iteration(m, 0.9)


# --- randomized actions ------------------------------------------------------

@pytest.fixture
def remote3():
    return integer_remote_params(q=(0.0, 0.5, 0.9), lam=(0.0, 0.5, 2.0))


def test_randomized_endpoints_are_bitwise(remote3):
    k = remote_kernel(remote3)
    r = randomize_kernel(k, w_grid=gap_grid(k.actions, 11))
    for u, label in enumerate(k.actions):
        assert r.rows[r.actions.index(label)].tobytes() == k.rows[u].tobytes()


def test_randomized_midpoint_is_average(remote3):
    k = remote_kernel(remote3)
    r = randomize_kernel(k, w_grid=[0.5, 1.5])
    assert np.allclose(r.rows[0], 0.5 * (k.rows[0] + k.rows[1]), atol=1e-15)
    assert np.allclose(r.rows[1], 0.5 * (k.rows[1] + k.rows[2]), atol=1e-15)
    assert np.allclose(r.rows.sum(axis=-1), 1.0)


def test_randomized_out_of_range(remote3):
    k = remote_kernel(remote3)
    with pytest.raises(OutOfRange):
        randomize_kernel(k, w_grid=[2.5])
    with pytest.raises(OutOfRange):
        randomize_cost(remote_costs(remote3), k.actions, w_grid=[-0.1])


def test_randomized_remote_kernel_keeps_structure():
    params = integer_remote_params(q=(0.0, 0.9))
    k = randomize_kernel(remote_kernel(params), w_grid=gap_grid((0, 1), 11))
    assert len(k.actions) == 11
    s = compute_S(k)
    assert is_even_kernel(k) and check_C3(s) and check_C5(s)


def test_randomized_cost_endpoints_and_midpoint(remote3):
    c = remote_costs(remote3)
    r = randomize_cost(c, (0, 1, 2), w_grid=[0, 0.5, 1, 2])
    assert np.array_equal(r.stage[:, 0], c.stage[:, 0])
    assert np.allclose(r.stage[:, 1], 0.5 * (c.stage[:, 0] + c.stage[:, 1]))
    assert np.array_equal(r.stage[:, 3], c.stage[:, 2])


def test_randomized_remote_cost_submodular(remote3):
    w = gap_grid((0, 1, 2), 11)
    r = randomize_cost(remote_costs(remote3), (0, 1, 2), w_grid=w)
    assert check_C4(r, remote3.grid, tuple(w))


def test_nonlinear_mixing_keeps_structure():
    theta = MixingFunction(lambda s: s ** 3)
    m = random_c1c5_model(np.random.default_rng(4))
    k = randomize_kernel(m.kernel, theta, gap_grid(m.actions, 7))
    s = compute_S(k)
    assert is_even_kernel(k) and check_C3(s) and check_C5(s)


def test_invalid_mixing_function():
    with pytest.raises(ValidationError):
        MixingFunction(lambda s: 1 - s)
    with pytest.raises(ValidationError):
        MixingFunction(lambda s: 0.5 * s)


def test_gap_grid():
    w = gap_grid((0, 1, 3), 3)
    assert list(w) == [0, 0.5, 1, 2, 3]
