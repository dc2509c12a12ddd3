"""Checkers for evenness, quasi-convexity, stochastic monotonicity and
submodularity, and the consolidated condition report.

Every checker returns a :class:`Verdict`, truthy when the property holds.  A
violated verdict carries the first violating :class:`Witness` in
lexicographic ``(t, u, x, y)`` scan order.  Comparisons use an absolute slack
``tol`` (default 1e-9); "increasing" means weakly increasing throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import format_number

EPS = 1e-9

CONDITIONS = ("C1", "C2", "C3", "C4", "C5", "A1", "A2", "B1", "B2'", "B3", "B4")


@dataclass(frozen=True)
class Witness:
    condition: str
    t: Optional[int] = None
    u: Optional[float] = None
    x: Optional[float] = None
    x2: Optional[float] = None
    y: Optional[float] = None
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    note: str = ""

    def __str__(self):
        def f(v):
            if v is None:
                return "-"
            return format_number(v) if isinstance(v, float) else str(v)

        parts = [self.condition, f(self.t), f(self.u), f(self.x), f(self.x2),
                 f(self.lhs), f(self.rhs)]
        s = "(" + ", ".join(parts) + ")"
        extra = []
        if self.y is not None:
            extra.append(f"y={f(self.y)}")
        if self.note:
            extra.append(self.note)
        return s + (" " + " ".join(extra) if extra else "")

    def relabel(self, condition, **kw):
        d = dict(self.__dict__)
        d.update(condition=condition, **kw)
        return Witness(**d)


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: Optional[Witness] = None

    def __bool__(self):
        return self.holds

    def __post_init__(self):
        if self.holds != (self.witness is None):
            raise ValueError("a violated verdict needs a witness, a holding one none")


HOLDS = Verdict(True)


def _f(v):
    return float(v)


def _nonneg(values, grid):
    return np.asarray(values, dtype=float)[..., grid.zero_index:]


def is_even_function(f, grid, tol: float = EPS, condition: str = "even") -> Verdict:
    """``|f(x) - f(-x)| <= tol`` everywhere; witness at the smallest bad ``x > 0``."""
    f = np.asarray(f, dtype=float)
    z = grid.zero_index
    pos, neg = f[z + 1:], f[:z][::-1]
    bad = np.flatnonzero(np.abs(pos - neg) > tol)
    if bad.size == 0:
        return HOLDS
    k = bad[0]
    x = grid.points[z + 1 + k]
    return Verdict(False, Witness(condition, x=_f(x), x2=_f(-x), lhs=_f(pos[k]), rhs=_f(neg[k])))


def _first_increase_violation(a, tol):
    """First ``i < j`` with ``a[i] > a[j] + tol`` along axis 0, per column.

    Returns ``(i, col, j)`` in row-major order of ``(i, col)`` or None.
    Uses suffix minima, so the check covers all pairs, not just neighbours.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] < 2:
        return None
    suf = np.minimum.accumulate(a[::-1], axis=0)[::-1]
    viol = a[:-1] > suf[1:] + tol
    hits = np.argwhere(viol)
    if hits.size == 0:
        return None
    i, col = hits[0]
    j = i + 1 + int(np.argmin(a[i + 1:, col]))
    return int(i), int(col), j


def is_nondecreasing_nonneg(f, grid, tol: float = EPS, condition: str = "monotone") -> Verdict:
    f = _nonneg(f, grid)
    hit = _first_increase_violation(f, tol)
    if hit is None:
        return HOLDS
    i, _, j = hit
    pts = grid.nonneg_points
    return Verdict(False, Witness(condition, x=_f(pts[i]), x2=_f(pts[j]),
                                  lhs=_f(f[i]), rhs=_f(f[j])))


def is_quasi_convex_even(f, grid, tol: float = EPS, condition: str = "quasi-convex") -> Verdict:
    """Even, and nondecreasing on the nonnegative grid points."""
    v = is_even_function(f, grid, tol, condition)
    if not v:
        return v
    return is_nondecreasing_nonneg(f, grid, tol, condition)


def is_even_kernel(kernel, tol: float = EPS, condition: str = "C2") -> Verdict:
    """``p(y|x;u) == p(-y|-x;u)`` within ``tol`` for all ``u, x, y``."""
    rows = kernel.rows
    diff = np.abs(rows - rows[:, ::-1, ::-1])
    hits = np.argwhere(diff > tol)
    if hits.size == 0:
        return HOLDS
    u, i, j = hits[0]
    pts = kernel.grid.points
    return Verdict(False, Witness(condition, u=_f(kernel.actions.values[u]), x=_f(pts[i]),
                                  y=_f(pts[j]), lhs=_f(rows[u, i, j]),
                                  rhs=_f(rows[u, -1 - i, -1 - j]),
                                  note=f"mirror=({format_number(-pts[i])}, {format_number(-pts[j])})"))


@dataclass(frozen=True, eq=False)
class SFunction:
    """``table[u, x, y] = S(y | x; u)`` over nonnegative ``x, y``."""

    points: np.ndarray
    actions: tuple
    table: np.ndarray

    def __call__(self, y_index, x_index, u_index):
        return self.table[u_index, x_index, y_index]


def compute_S(kernel) -> SFunction:
    """``S(y|x;u) = 1 - Pr(-y < X' < y | x; u)`` for nonnegative ``x, y``.

    This is one minus the folded CDF, so ``S(0|x;u) = 1`` and ``S`` falls to
    about 0 past the grid edge.  It is computed from the unfolded rows.
    """
    grid = kernel.grid
    z = grid.zero_index
    rows = kernel.rows[:, z:, :]
    cdf = np.cumsum(rows, axis=-1)
    m = grid.size - z
    inner = np.zeros(rows.shape[:2] + (m,))
    j = np.arange(1, m)
    # mass on indices z-j+1 .. z+j-1
    inner[..., 1:] = cdf[..., z + j - 1] - cdf[..., z - j]
    table = 1.0 - inner
    table.setflags(write=False)
    return SFunction(grid.nonneg_points, kernel.actions.values, table)


def check_C3(s: SFunction, tol: float = EPS, condition: str = "C3") -> Verdict:
    """``S(y|x;u) <= S(y|x';u) + tol`` for all ``u``, ``y`` and ``x < x'``."""
    for u in range(s.table.shape[0]):
        hit = _first_increase_violation(s.table[u], tol)
        if hit is not None:
            i, y, j = hit
            return Verdict(False, Witness(condition, u=_f(s.actions[u]), x=_f(s.points[i]),
                                          x2=_f(s.points[j]), y=_f(s.points[y]),
                                          lhs=_f(s.table[u, i, y]), rhs=_f(s.table[u, j, y])))
    return HOLDS


def _submodular_hit(f, tol):
    """First adjacent cell (u, x) with f(x',u') + f(x,u) > f(x',u) + f(x,u') + tol."""
    f = np.asarray(f, dtype=float)
    lhs = f[1:, 1:] + f[:-1, :-1]
    rhs = f[1:, :-1] + f[:-1, 1:]
    hits = np.argwhere((lhs > rhs + tol).T)  # (u, x) order
    if hits.size == 0:
        return None
    u, i = hits[0]
    return int(i), int(u), _f(lhs[i, u]), _f(rhs[i, u])


def check_submodular(f, points, actions, tol: float = EPS, condition: str = "submodular") -> Verdict:
    """Four-point condition on adjacent cells of ``f[x, u]``.

    ``points`` label the rows (nonnegative states), ``actions`` the columns.
    """
    hit = _submodular_hit(f, tol)
    if hit is None:
        return HOLDS
    i, u, lhs, rhs = hit
    return Verdict(False, Witness(condition, u=_f(actions[u]), x=_f(points[i]),
                                  x2=_f(points[i + 1]), lhs=lhs, rhs=rhs,
                                  note=f"u'={format_number(actions[u + 1])}"))


def check_C4(costs, grid, actions, tol: float = EPS, condition: str = "C4") -> Verdict:
    acts = tuple(actions)
    for t, tab in enumerate(costs.tables, start=1):
        v = check_submodular(_nonneg(tab.T, grid).T, grid.nonneg_points, acts, tol, condition)
        if not v:
            t_label = None if costs.homogeneous else t
            return Verdict(False, v.witness.relabel(condition, t=t_label))
    return HOLDS


def check_C5(s: SFunction, tol: float = EPS, condition: str = "C5") -> Verdict:
    """Adjacent-cell submodularity of ``(x, u) -> S(y|x;u)`` for every ``y``."""
    n_y = s.table.shape[2]
    best = None
    for y in range(n_y):
        hit = _submodular_hit(s.table[:, :, y].T, tol)
        if hit is not None:
            i, u, lhs, rhs = hit
            key = (u, i, y)
            if best is None or key < best[0]:
                best = (key, lhs, rhs)
    if best is None:
        return HOLDS
    (u, i, y), lhs, rhs = best
    return Verdict(False, Witness(condition, u=_f(s.actions[u]), x=_f(s.points[i]),
                                  x2=_f(s.points[i + 1]), y=_f(s.points[y]), lhs=lhs, rhs=rhs,
                                  note=f"u'={format_number(s.actions[u + 1])}"))


def is_stochastically_monotone(kernel, tol: float = EPS, condition: str = "B2") -> Verdict:
    """``P(y|x) = sum_{z<y} p(z|x)`` is nonincreasing in ``x`` for every ``y``.

    Applies to a kernel on any grid (used on folded kernels).
    """
    rows = kernel.rows
    cdf = np.concatenate([np.zeros(rows.shape[:2] + (1,)), np.cumsum(rows, axis=-1)[..., :-1]],
                         axis=-1)
    pts = kernel.grid.points
    for u in range(rows.shape[0]):
        hit = _first_increase_violation(-cdf[u], tol)
        if hit is not None:
            i, y, j = hit
            return Verdict(False, Witness(condition, u=_f(kernel.actions.values[u]),
                                          x=_f(pts[i]), x2=_f(pts[j]), y=_f(pts[y]),
                                          lhs=_f(cdf[u, i, y]), rhs=_f(cdf[u, j, y])))
    return HOLDS


def check_B2_equivalence(kernel, tol: float = EPS) -> bool:
    """True when C3 on the S-function and stochastic monotonicity of the
    folded kernel give the same verdict."""
    from .folding import fold_kernel

    c3 = check_C3(compute_S(kernel), tol).holds
    b2 = is_stochastically_monotone(fold_kernel(kernel), tol).holds
    return c3 == b2


@dataclass
class StructureReport:
    verdicts: dict = field(default_factory=dict)
    tolerance: float = EPS

    @property
    def witnesses(self) -> dict:
        return {k: v.witness for k, v in self.verdicts.items() if not v.holds}

    def holds(self, *names) -> bool:
        names = names or tuple(self.verdicts)
        return all(self.verdicts[n].holds for n in names)

    @property
    def theorem_conditions(self) -> bool:
        return self.holds("C1", "C2", "C3", "C4", "C5")

    def lines(self):
        out = []
        for name in CONDITIONS:
            if name not in self.verdicts:
                continue
            v = self.verdicts[name]
            out.append(f"{name} holds" if v else f"{name} violated {v.witness}")
        return out

    def __str__(self):
        return "\n".join(self.lines())


def _first_failure(checks):
    for v in checks:
        if not v:
            return v
    return HOLDS


def _cost_checks(model, check, condition, tol):
    grid, costs = model.grid, model.costs
    acts = model.actions.values
    yield check(costs.terminal, grid, tol, condition)
    for t, tab in enumerate(costs.tables, start=1):
        t_label = None if costs.homogeneous else t
        for u in range(tab.shape[1]):
            v = check(tab[:, u], grid, tol, condition)
            if not v:
                v = Verdict(False, v.witness.relabel(condition, t=t_label, u=acts[u]))
            yield v


def full_report(model, tol: float = EPS) -> StructureReport:
    """Check every structural condition on ``model``.

    C1 costs even and quasi-convex, C2 kernel even, C3 S increasing in x,
    C4 costs submodular, C5 S submodular.  A1/A2 are the evenness halves,
    B1 is cost monotonicity on nonnegative states, and B2'/B3/B4 coincide
    with C3/C4/C5.
    """
    s = compute_S(model.kernel)
    v = {}
    v["C1"] = _first_failure(_cost_checks(model, is_quasi_convex_even, "C1", tol))
    v["C2"] = is_even_kernel(model.kernel, tol, "C2")
    v["C3"] = check_C3(s, tol, "C3")
    v["C4"] = check_C4(model.costs, model.grid, model.actions.values, tol, "C4")
    v["C5"] = check_C5(s, tol, "C5")
    v["A1"] = _first_failure(_cost_checks(model, is_even_function, "A1", tol))
    v["A2"] = is_even_kernel(model.kernel, tol, "A2")
    v["B1"] = _first_failure(_cost_checks(model, is_nondecreasing_nonneg, "B1", tol))
    for b, c in (("B2'", "C3"), ("B3", "C4"), ("B4", "C5")):
        v[b] = v[c] if v[c] else Verdict(False, v[c].witness.relabel(b))
    return StructureReport(v, tol)
