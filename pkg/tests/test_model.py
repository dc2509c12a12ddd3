import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdpfold.errors import AsymmetricGrid, DimensionMismatch, RowNotStochastic, ValidationError
from mdpfold.model import ActionSet, CostSpec, FoldedGrid, Kernel, StateGrid, build_model
from mdpfold.remote import build_remote_model

from conftest import identity_model, integer_remote_params


def test_identity_model_is_valid():
    m = identity_model()
    assert m.grid.size == 3
    assert list(m.grid.points) == [-1, 0, 1]
    assert np.array_equal(m.kernel.rows[0], np.eye(3))


def test_row_summing_to_point_nine_is_rejected():
    rows = np.eye(3)[None].copy()
    rows[0, 1] = [0.0, 0.9, 0.0]
    with pytest.raises(RowNotStochastic):
        build_model([-1, 0, 1], [0], rows, (np.zeros((3, 1)), np.zeros(3)))


def test_tiny_row_deviation_is_rescaled():
    rows = np.full((1, 3, 3), 1 / 3)
    rows[0, 0, 0] += 5e-10
    m = build_model([-1, 0, 1], [0], rows, (np.zeros((3, 1)), np.zeros(3)))
    assert np.allclose(m.kernel.rows.sum(axis=-1), 1.0, atol=1e-15)
    # exact rows stay bit-identical
    assert np.array_equal(m.kernel.rows[0, 1], rows[0, 1])


def test_negative_entry_rejected():
    rows = np.array([[[1.2, -0.2, 0.0], [0, 1, 0], [0, 0, 1]]])
    with pytest.raises(ValidationError):
        Kernel(StateGrid.integer(1), ActionSet((0,)), rows)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        build_model([-1, 0, 1], [0, 1], np.tile(np.eye(3), (1, 1, 1)),
                    (np.zeros((3, 2)), np.zeros(3)))
    with pytest.raises(DimensionMismatch):
        build_model([-1, 0, 1], [0], np.eye(3)[None], (np.zeros((3, 2)), np.zeros(3)))
    with pytest.raises(DimensionMismatch):
        build_model([-1, 0, 1], [0], np.eye(3)[None], (np.zeros((3, 1)), np.zeros(4)))


@pytest.mark.parametrize("points", [[-1, 0, 2], [-1, 0, 1, 2], [0, 1, 2], [-2, -1, 1, 2, 3]])
def test_asymmetric_grid_rejected(points):
    with pytest.raises(AsymmetricGrid):
        StateGrid.from_points(points)


def test_half_range_must_be_multiple_of_step():
    with pytest.raises(AsymmetricGrid):
        StateGrid.continuous(1.0, 0.3)


def test_action_set_must_ascend():
    with pytest.raises(ValidationError):
        ActionSet((1, 0))
    with pytest.raises(ValidationError):
        ActionSet(())


def test_remote_generator_output_is_valid():
    model, _ = build_remote_model(integer_remote_params())
    assert np.allclose(model.kernel.rows.sum(axis=-1), 1.0)


def test_stage_cost_lookup():
    c = CostSpec([np.zeros((3, 1)), np.ones((3, 1))], np.zeros(3))
    assert c.n_stages == 2 and not c.homogeneous
    assert c.stage_cost(2)[0, 0] == 1.0
    with pytest.raises(ValidationError):
        c.stage_cost(3)


def test_tables_are_read_only():
    m = identity_model()
    with pytest.raises(ValueError):
        m.kernel.rows[0, 0, 0] = 0.5
    with pytest.raises(ValueError):
        m.grid.points[0] = 3


@given(st.integers(1, 40), st.sampled_from([1.0, 0.5, 0.25, 0.1, 0.01]))
def test_grid_invariants(n, step):
    g = StateGrid.continuous(n * step, step)
    pts = g.points
    assert pts.size % 2 == 1
    assert pts[g.zero_index] == 0
    assert np.allclose(pts, -pts[::-1], atol=1e-12)
    assert np.allclose(np.diff(pts), step)
    for i in range(pts.size):
        assert g.index_of(pts[i]) == i
        assert pts[g.mirror(i)] == -pts[i]
    f = FoldedGrid.of(g)
    assert f.size == (g.size + 1) // 2
    assert np.array_equal(f.points, g.nonneg_points)
