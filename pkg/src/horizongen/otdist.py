"""Asymmetric optimal transport between state distributions.

The ground cost is a certified quasimetric over states, which makes the
optimal transport cost itself a quasimetric over distributions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .quasimetric import QuasimetricTable

MAX_SUPPORT = 64
PROB_TOL = 1e-12
GAP_TOL = 1e-9


class SupportTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteDistribution:
    support: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probs):
            raise ValueError("support and probs differ in length")
        if len(set(self.support)) != len(self.support):
            raise ValueError("duplicate support entries")
        p = np.asarray(self.probs, dtype=float)
        if (p < 0).any():
            raise ValueError("negative probability")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}")

    @classmethod
    def dirac(cls, s: int) -> "DiscreteDistribution":
        return cls((int(s),), (1.0,))

    @classmethod
    def uniform(cls, states) -> "DiscreteDistribution":
        states = tuple(int(s) for s in states)
        return cls(states, tuple([1.0 / len(states)] * len(states)))

    @classmethod
    def from_weights(cls, states, weights) -> "DiscreteDistribution":
        """Normalize nonnegative weights; zero-weight states are dropped."""
        w = np.asarray(weights, dtype=float)
        keep = w > 0
        w = w[keep] / w[keep].sum()
        return cls(tuple(int(s) for s in np.asarray(states)[keep]), tuple(float(x) for x in w))

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[list(self.support)] = self.probs
        return out


@dataclass
class TransportPlan:
    coupling: np.ndarray
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    dual_gap: float

    def nonzeros(self, tol: float = 0.0):
        i, j = np.nonzero(self.coupling > tol)
        return [(self.rows[a], self.cols[b], float(self.coupling[a, b])) for a, b in zip(i, j)]


def _cost_matrix(cost) -> np.ndarray:
    if isinstance(cost, QuasimetricTable):
        if not cost.certified:
            raise ValueError("cost table has not been certified as a quasimetric")
        return cost.values
    raise TypeError("cost must be a certified QuasimetricTable")


def dqmd(P: DiscreteDistribution, Q: DiscreteDistribution, cost: QuasimetricTable) -> tuple[float, TransportPlan]:
    """Minimum transport cost from ``P`` to ``Q`` and an optimal coupling.

    Solved as an exact LP (HiGHS). The primal/dual gap computed from the
    solver's equality multipliers is checked against ``GAP_TOL``.
    """
    C = _cost_matrix(cost)
    if len(P.support) > MAX_SUPPORT or len(Q.support) > MAX_SUPPORT:
        raise SupportTooLargeError(f"supports are capped at {MAX_SUPPORT}")
    rows, cols = list(P.support), list(Q.support)
    a, b = np.asarray(P.probs), np.asarray(Q.probs)
    m, k = len(rows), len(cols)
    c = C[np.ix_(rows, cols)]
    blocked = ~np.isfinite(c)
    c_lp = np.where(blocked, 0.0, c).ravel()
    A_eq = np.zeros((m + k, m * k))
    for i in range(m):
        A_eq[i, i * k:(i + 1) * k] = 1.0
    for j in range(k):
        A_eq[m + j, j::k] = 1.0
    b_eq = np.concatenate([a, b])
    bounds = [(0.0, 0.0) if x else (0.0, None) for x in blocked.ravel()]
    res = linprog(c_lp, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        # the only feasible couplings use an infinite-cost pair
        return math.inf, TransportPlan(np.full((m, k), np.nan), tuple(rows), tuple(cols), math.nan)
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    plan = np.clip(res.x.reshape(m, k), 0.0, None)
    primal = float(c_lp @ res.x)
    y = res.eqlin.marginals
    dual = float(b_eq @ y)
    gap = abs(primal - dual)
    reduced = (c_lp - A_eq.T @ y)[~blocked.ravel()]
    if gap >= GAP_TOL or (reduced < -GAP_TOL).any():
        raise RuntimeError(f"optimality certificate failed: gap {gap:.3e}, min reduced cost {reduced.min():.3e}")
    return primal, TransportPlan(plan, tuple(rows), tuple(cols), gap)


def triangle_witness(P, Q, R, cost) -> tuple[float, float]:
    """``(dqmd(P, R), dqmd(P, Q) + dqmd(Q, R))``; the first never exceeds the second."""
    lhs = dqmd(P, R, cost)[0]
    rhs = dqmd(P, Q, cost)[0] + dqmd(Q, R, cost)[0]
    return lhs, rhs
