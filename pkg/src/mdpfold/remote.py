"""Remote-estimation power allocation as an MDP on the estimation error.

State ``e`` (error), action ``u`` (transmit power), per-stage cost
``lambda(u) + (1 - q(u)) d(e)`` and transition

    e_next = w          with probability q(u)   (packet received)
    e_next = a e + w    otherwise,

with ``w`` drawn from the noise density ``phi``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from .errors import (
    AssumptionM0Violated,
    AssumptionM3Violated,
    ParameterOutOfRegime,
    ValidationError,
)
from .lemmas import check_preconditions
from .model import (
    ActionSet,
    CostSpec,
    Kernel,
    MDPModel,
    StateGrid,
    grid_decimals,
)
from .solve import SolveResult, solve_finite_horizon
from .structure import StructureReport, full_report, is_quasi_convex_even

NUM_TOL = 1e-12


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float = 1.0

    def masses(self, offsets, step):
        return norm.pdf(offsets / self.sigma) / self.sigma * step


@dataclass(frozen=True)
class TableNoise:
    """Noise masses on ``{-m, ..., m}`` (in units of the grid step)."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) % 2 == 0:
            raise ValidationError("noise table needs an odd number of entries centred on 0")
        if any(v < 0 for v in vals) or abs(sum(vals) - 1) > 1e-9:
            raise ValidationError("noise table must be a probability mass function")
        object.__setattr__(self, "values", vals)

    def masses(self, offsets, step):
        k = offsets / step
        ki = np.rint(k)
        m = len(self.values) // 2
        vals = np.asarray(self.values)
        on_lattice = np.abs(k - ki) < 1e-9
        idx = ki.astype(int) + m
        inside = on_lattice & (idx >= 0) & (idx < vals.size)
        out = np.zeros_like(offsets, dtype=float)
        out[inside] = vals[idx[inside]]
        return out


Noise = Union[GaussianNoise, TableNoise]
Distortion = Union[str, Callable, Sequence[float]]


def distortion_values(d: Distortion, points) -> np.ndarray:
    if isinstance(d, str):
        if d == "square":
            return points ** 2
        if d == "abs":
            return np.abs(points)
        raise ValidationError(f"unknown distortion {d!r}")
    if callable(d):
        return np.asarray([float(d(x)) for x in points])
    vals = np.asarray(d, dtype=float)
    if vals.shape != points.shape:
        raise ValidationError(f"distortion table has {vals.size} entries, grid has {points.size}")
    return vals


@dataclass(frozen=True)
class RemoteEstimationParams:
    a: float = 1.0
    noise: Noise = GaussianNoise(1.0)
    lambda_: tuple = (0.0, 1.0)
    q: tuple = (0.0, 0.9)
    d: Distortion = "square"
    grid: StateGrid = field(default_factory=lambda: StateGrid.continuous(10.0, 0.01))
    horizon: int = 4
    actions: Optional[tuple] = None

    @property
    def action_set(self) -> ActionSet:
        labels = self.actions if self.actions is not None else tuple(range(len(self.q)))
        return ActionSet(tuple(labels))


def noise_masses(params: RemoteEstimationParams) -> np.ndarray:
    """Noise masses on the grid points (unnormalized cell values)."""
    g = params.grid
    return params.noise.masses(g.points, g.step)


def check_assumptions(params: RemoteEstimationParams) -> dict:
    """Verdict per assumption M0-M5 (M0 and M3 are the ones enforced)."""
    lam = np.asarray(params.lambda_, dtype=float)
    q = np.asarray(params.q, dtype=float)
    d = distortion_values(params.d, params.grid.points)
    g = params.grid
    z = g.zero_index
    out = {
        "M0": bool(abs(q[0]) <= NUM_TOL and q[-1] <= 1 + NUM_TOL and np.all((q >= 0) & (q <= 1))),
        "M1": bool(abs(lam[0]) <= NUM_TOL and np.all(np.diff(lam) >= 0)),
        "M2": bool(np.all(np.diff(q) >= 0)),
        "M3": bool(abs(d[z]) <= NUM_TOL and is_quasi_convex_even(d, g)),
    }
    phi = noise_masses(params)
    even, unimodal = check_preconditions(phi, tol=1e-12)
    out["M4"] = bool(even)
    out["M5"] = bool(unimodal)
    return out


def _normalized(mat):
    sums = mat.sum(axis=-1, keepdims=True)
    if np.any(sums <= 0):
        raise ValidationError("noise has no mass on the grid for some state; enlarge the grid")
    return mat / sums


def remote_kernel_parts(params: RemoteEstimationParams):
    """``(reset, drift)``: the reset row ``phi(y)`` and drift rows ``phi(y - a e)``.

    Both are sampled on the grid and renormalized per row to absorb the mass
    truncated beyond the grid edge.
    """
    g = params.grid
    pts = g.points
    reset = _normalized(params.noise.masses(pts, g.step))
    drift = _normalized(params.noise.masses(pts[None, :] - params.a * pts[:, None], g.step))
    return reset, drift


def remote_kernel(params: RemoteEstimationParams, even: Optional[bool] = None) -> Kernel:
    reset, drift = remote_kernel_parts(params)
    q = np.asarray(params.q, dtype=float)
    rows = q[:, None, None] * reset[None, None, :] + (1 - q)[:, None, None] * drift[None, :, :]
    if even is None:
        even = check_assumptions(params)["M4"]
    if even:
        # copy x >= 0 rows onto -x so the kernel is exactly even
        z = params.grid.zero_index
        rows[:, :z, :] = rows[:, :z:-1, ::-1]
    return Kernel(params.grid, params.action_set, rows)


def remote_costs(params: RemoteEstimationParams) -> CostSpec:
    d = distortion_values(params.d, params.grid.points)
    lam = np.asarray(params.lambda_, dtype=float)
    q = np.asarray(params.q, dtype=float)
    stage = lam[None, :] + (1 - q)[None, :] * d[:, None]
    return CostSpec(stage, np.zeros(params.grid.size))


def build_remote_model(params: RemoteEstimationParams, name: str = "remote-estimation"):
    """Model plus assumption report.

    The cost is charged at decision stages ``1..T`` and nothing afterwards,
    so the returned model has horizon ``T + 1`` with a zero terminal cost.
    """
    if len(params.lambda_) != len(params.q):
        raise ValidationError("lambda_ and q need one entry per action")
    assumptions = check_assumptions(params)
    if not assumptions["M0"]:
        raise AssumptionM0Violated(f"need q(0) = 0 and q in [0, 1], got q = {params.q}")
    if not assumptions["M3"]:
        raise AssumptionM3Violated("distortion must be even, quasi-convex, with d(0) = 0")
    model = MDPModel(params.grid, params.action_set, remote_kernel(params, assumptions["M4"]),
                     remote_costs(params), params.horizon + 1, name)
    return model, assumptions


# --- Gaussian threshold example ---------------------------------------

FIG1_DEFAULTS = dict(half_range=10.0, step=0.01, horizon=4, a=1.0, sigma=1.0, lam=1.0, q1=0.9)


def fig1_params(half_range=10.0, step=0.01, horizon=4, a=1.0, sigma=1.0, lam=1.0,
                q1=0.9) -> RemoteEstimationParams:
    return RemoteEstimationParams(a=a, noise=GaussianNoise(sigma), lambda_=(0.0, lam),
                                  q=(0.0, q1), d="square",
                                  grid=StateGrid.continuous(half_range, step), horizon=horizon)


@dataclass(frozen=True, eq=False)
class Fig1Result:
    model: MDPModel
    solution: SolveResult
    thresholds: tuple
    midpoints: tuple
    threshold_form: bool
    values_quasi_convex: bool
    policy_quasi_convex: bool

    @property
    def decision_values(self) -> np.ndarray:
        """``V_1 .. V_T`` (the trailing zero stage dropped)."""
        return self.solution.values[:-1]


def extract_threshold(policy_index, grid):
    """Switch point of a two-level policy on the nonnegative states.

    Returns ``(midpoint, is_threshold)`` where ``midpoint`` lies between the
    last state using the lowest action and the first state using another
    one; ``inf`` when the lowest action is used everywhere.
    """
    pol = np.asarray(policy_index)[grid.zero_index:]
    pts = grid.nonneg_points
    up = np.flatnonzero(pol != 0)
    if up.size == 0:
        return float("inf"), True
    first = up[0]
    is_thr = bool(np.all(pol[first:] == pol[first]) and np.all(pol[:first] == 0))
    if first == 0:
        return 0.0, is_thr
    return float((pts[first - 1] + pts[first]) / 2), is_thr


def fig1_model(**overrides):
    """``(model, params)`` for the Gaussian example, without solving it."""
    kw = dict(FIG1_DEFAULTS)
    unknown = set(overrides) - set(kw)
    if unknown:
        raise ValidationError(f"unknown fig1 parameter(s): {sorted(unknown)}")
    kw.update(overrides)
    params = fig1_params(**kw)
    model, _ = build_remote_model(params, name="fig1")
    return model, params


def reproduce_fig1(**overrides) -> Fig1Result:
    """Solve the Gaussian example and extract one threshold per decision stage.

    Keyword overrides: ``half_range``, ``step``, ``horizon``, ``a``,
    ``sigma``, ``lam``, ``q1``.
    """
    model, params = fig1_model(**overrides)
    sol = solve_finite_horizon(model)
    decimals = grid_decimals(params.grid.step)
    mids, forms = [], []
    for t in range(params.horizon):
        mid, ok = extract_threshold(sol.policy_index[t], params.grid)
        mids.append(mid)
        forms.append(ok)
    grid = params.grid
    v_ok = all(is_quasi_convex_even(sol.values[t], grid) for t in range(sol.horizon))
    g_ok = all(is_quasi_convex_even(sol.policy[t], grid) for t in range(sol.horizon - 1))
    return Fig1Result(model, sol, tuple(round(m, decimals) for m in mids), tuple(mids),
                      all(forms), v_ok, g_ok)


# --- non-unimodal noise counterexample ---------------------------------

@dataclass(frozen=True, eq=False)
class M5Counterexample:
    model: MDPModel
    expected_v1: dict
    p: float
    k: float
    K: float


def counterexample_m5(p: float = 0.4, k: float = 0.25, K: float = 3.0,
                      half_range: int = 3) -> M5Counterexample:
    """Two-stage integer model whose noise ``(p, 1-2p, p)`` is not unimodal.

    Actions {0, 1} with ``lambda = (0, K)``, ``q = (0, 1)``, ``a = 1`` and
    ``d(0) = 0, d(+-1) = 1, d(e) = 1 + k`` otherwise.  The first stage
    charges only the communication cost and the distortion is charged at the
    terminal stage, which gives ``V_1(0) = 2p`` and ``V_1(+-1) = pk + 1 - p``.
    """
    problems = []
    if not 1 / 3 < p < 1 / 2:
        problems.append("need 1/3 < p < 1/2")
    if not k > 0:
        problems.append("need k > 0")
    if not K > 2 * (1 + k):
        problems.append("need K > 2(1 + k)")
    if not k < (3 * p - 1) / p:
        problems.append("need k < (3p - 1)/p")
    if half_range < 2:
        problems.append("need half_range >= 2")
    if problems:
        raise ParameterOutOfRegime("; ".join(problems))

    def dist(e):
        return 0.0 if e == 0 else (1.0 if abs(e) == 1 else 1.0 + k)

    params = RemoteEstimationParams(a=1, noise=TableNoise((p, 1 - 2 * p, p)), lambda_=(0.0, K),
                                    q=(0.0, 1.0), d=dist, grid=StateGrid.integer(half_range),
                                    horizon=1)
    kernel = remote_kernel(params)
    d = distortion_values(dist, params.grid.points)
    stage = np.tile(np.asarray(params.lambda_), (params.grid.size, 1))
    model = MDPModel(params.grid, params.action_set, kernel, CostSpec(stage, d), 2,
                     "counterexample-m5")
    expected = {0: 2 * p, 1: p * k + 1 - p, -1: p * k + 1 - p}
    return M5Counterexample(model, expected, p, k, K)


# --- decreasing success probability counterexample ---------------------

# Instance found by search_m2_instance() over M2_SEARCH_BOX; frozen here.
M2_INSTANCE = dict(horizon=2, lambda_u1=0.5, lambda_u2=0.1, q_u1=0.9, q_u2=0.7,
                   noise=(0.25, 0.5, 0.25), d="square", half_range=6)

M2_SEARCH_BOX = dict(
    horizon=(2, 3, 1),
    lambda_u1=(0.5, 1.0, 1.5, 2.0),
    lambda_u2=(0.1, 0.25, 0.5),
    q_u1=(0.9, 1.0),
    q_u2=(0.3, 0.5, 0.7),
    noise=((0.25, 0.5, 0.25), (1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16)),
    d=("square", "abs"),
)

RELABEL = {0.0: 0.0, 1.0: 2.0, 2.0: 1.0}


def m2_params(lambda_u1, lambda_u2, q_u1, q_u2, noise, d, horizon, half_range=6,
              relabeled=False) -> RemoteEstimationParams:
    """Actions ``{0, u1=1, u2=2}`` with ``q(u1) > q(u2)``; ``relabeled`` swaps u1 and u2."""
    lam = (0.0, lambda_u1, lambda_u2)
    q = (0.0, q_u1, q_u2)
    if relabeled:
        lam = (0.0, lambda_u2, lambda_u1)
        q = (0.0, q_u2, q_u1)
    return RemoteEstimationParams(a=1, noise=TableNoise(tuple(noise)), lambda_=lam, q=q, d=d,
                                  grid=StateGrid.integer(half_range), horizon=horizon,
                                  actions=(0, 1, 2))


def _m2_pattern(sol, grid, pattern):
    at = {x: sol.policy[0, grid.index_of(x)] for x in (-2, -1, 0, 1, 2)}
    return all(at[x] == pattern[abs(x)] for x in at)


@dataclass(frozen=True, eq=False)
class M2Counterexample:
    model: MDPModel
    relabeled_model: MDPModel
    relabel: dict
    solution: SolveResult
    relabeled_solution: SolveResult
    relabeled_report: StructureReport
    policy_quasi_convex: bool
    relabeled_policy_quasi_convex: bool
    instance: dict


def counterexample_m2(**instance) -> M2Counterexample:
    """Model with ``u1 < u2`` but ``q(u1) > q(u2)``.

    With u1 and u2 relabeled (``q`` becomes increasing) the optimal strategy
    is ``0, u1', u2'`` at ``|e| = 0, 1, 2``; in the original labels it is
    ``0, u2, u1``, which is not quasi-convex.
    """
    inst = dict(M2_INSTANCE)
    inst.update(instance)
    if not inst["q_u1"] > inst["q_u2"]:
        raise ParameterOutOfRegime("need q(u1) > q(u2)")
    orig_params = m2_params(**inst)
    rel_params = m2_params(**inst, relabeled=True)
    orig, _ = build_remote_model(orig_params, "counterexample-m2")
    rel, assumptions = build_remote_model(rel_params, "counterexample-m2-relabeled")
    for m in ("M0", "M2", "M3", "M4", "M5"):
        if not assumptions[m]:
            raise ParameterOutOfRegime(f"relabeled instance violates {m}")
    sol = solve_finite_horizon(orig)
    rel_sol = solve_finite_horizon(rel)
    grid = orig.grid
    if not _m2_pattern(sol, grid, {0: 0.0, 1: 2.0, 2: 1.0}):
        raise ParameterOutOfRegime("instance does not produce the 0, u2, u1 strategy")
    g_ok = all(is_quasi_convex_even(sol.policy[t], grid) for t in range(sol.horizon - 1))
    rel_ok = all(is_quasi_convex_even(rel_sol.policy[t], grid) for t in range(rel_sol.horizon - 1))
    return M2Counterexample(orig, rel, dict(RELABEL), sol, rel_sol, full_report(rel),
                            g_ok, rel_ok, inst)


def search_m2_instance(box: dict = None, half_range: int = 6):
    """First instance in ``box`` (iterated in key order) whose stage-1 strategy
    is ``0, u2, u1`` at ``|e| = 0, 1, 2`` and whose relabeled model satisfies
    C1-C5."""
    box = box or M2_SEARCH_BOX
    keys = list(box)
    for combo in itertools.product(*(box[k] for k in keys)):
        inst = dict(zip(keys, combo), half_range=half_range)
        if not inst["q_u1"] > inst["q_u2"]:
            continue
        orig, _ = build_remote_model(m2_params(**inst))
        if not _m2_pattern(solve_finite_horizon(orig), orig.grid, {0: 0.0, 1: 2.0, 2: 1.0}):
            continue
        rel, _ = build_remote_model(m2_params(**inst, relabeled=True))
        if full_report(rel).theorem_conditions:
            return inst
    return None
