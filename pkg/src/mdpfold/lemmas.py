"""Exhaustive checks of the inequalities an even, unimodal integer noise
density must satisfy, used as a numerical oracle for the remote-estimation
kernel's structure.
"""
from __future__ import annotations

import itertools

import numpy as np

from .errors import PreconditionFailed
from .structure import EPS, HOLDS, Verdict, Witness


class IntegerDensity:
    """Mass function on ``{-m, ..., m}``, zero elsewhere."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size % 2 == 0:
            raise ValueError("density needs an odd number of entries centred on 0")
        self.values = values
        self.m = values.size // 2
        self._cdf = np.cumsum(values)

    def __call__(self, k: int) -> float:
        i = k + self.m
        return float(self.values[i]) if 0 <= i < self.values.size else 0.0

    def cdf(self, k: int) -> float:
        """``Pr(W <= k)``."""
        i = k + self.m
        if i < 0:
            return 0.0
        return float(self._cdf[min(i, self.values.size - 1)])


def check_preconditions(phi, tol: float = EPS):
    """Return ``(even, unimodal)`` verdicts for a density on ``{-m..m}``."""
    d = IntegerDensity(phi)
    even = HOLDS
    for k in range(1, d.m + 1):
        if abs(d(k) - d(-k)) > tol:
            even = Verdict(False, Witness("M4", x=float(k), lhs=d(k), rhs=d(-k)))
            break
    unimodal = HOLDS
    for k in range(0, d.m):
        if d(k + 1) > d(k) + tol:
            unimodal = Verdict(False, Witness("M5", x=float(k), x2=float(k + 1),
                                              lhs=d(k), rhs=d(k + 1)))
            break
    return even, unimodal


def _scan(name, cases, tol):
    for args, lhs, rhs in cases:
        if lhs < rhs - tol:
            labels = dict(zip(("x", "y", "b"), args))
            return Verdict(False, Witness(name, x=float(labels.get("x")), y=float(labels.get("y")),
                                          lhs=lhs, rhs=rhs,
                                          note=" ".join(f"{k}={v}" for k, v in labels.items())))
    return HOLDS


def verify_noise_lemmas(phi, a: int, tol: float = EPS) -> dict:
    """Check the four noise inequalities for every ``x, y, b`` in ``{0..m}``.

    lemma2: phi(y - x) >= phi(y + x)
    lemma3: a * (phi(y - a x) - phi(y + a x)) >= 0
    lemma4: phi(y - |a| x - b) >= phi(y + |a| x + b) >= phi(y + |a| x + b + 1)
    lemma5: Phi(y + a x) + Phi(y - a x) >= Phi(y + a x + a) + Phi(y - a x - a)

    ``Phi`` is the CDF ``Pr(W <= k)``.  Raises PreconditionFailed if ``phi``
    is not even or not unimodal.
    """
    a = int(a)
    even, unimodal = check_preconditions(phi, tol)
    if not even:
        raise PreconditionFailed(f"density is not even: {even.witness}")
    if not unimodal:
        raise PreconditionFailed(f"density is not unimodal: {unimodal.witness}")
    d = IntegerDensity(phi)
    rng = range(d.m + 1)
    a_abs = abs(a)
    pairs = list(itertools.product(rng, rng))

    lemma2 = (((x, y), d(y - x), d(y + x)) for x, y in pairs)
    lemma3 = (((x, y), a * (d(y - a * x) - d(y + a * x)), 0.0) for x, y in pairs)

    def lemma4():
        for x, y, b in itertools.product(rng, rng, rng):
            s = a_abs * x + b
            yield (x, y, b), d(y - s), d(y + s)
            yield (x, y, b), d(y + s), d(y + s + 1)

    lemma5 = (((x, y), d.cdf(y + a * x) + d.cdf(y - a * x),
               d.cdf(y + a * x + a) + d.cdf(y - a * x - a)) for x, y in pairs)
    return {
        "lemma2": _scan("lemma2", lemma2, tol),
        "lemma3": _scan("lemma3", lemma3, tol),
        "lemma4": _scan("lemma4", lemma4(), tol),
        "lemma5": _scan("lemma5", lemma5, tol),
    }
