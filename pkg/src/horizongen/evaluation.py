"""Distance-stratified success, horizon generalization and Bellman error."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import rel_entr, softmax

from .control import Planner, PlanComposedPolicy, Policy, default_max_steps, rollout
from .env import GridWorld
from .estimation import action_distance_from_state, random_policy_occupancy


@dataclass
class PairOutcome:
    s: int
    g: int
    distance: float
    success: bool
    steps: int


@dataclass
class CurveBin:
    upper: float
    n_pairs: int
    successes: int

    @property
    def rate(self) -> float:
        return self.successes / self.n_pairs


@dataclass
class SuccessCurve:
    bins: list[CurveBin]
    outcomes: list[PairOutcome] = field(default_factory=list, repr=False)

    def rate_at(self, upper: float) -> float | None:
        for b in self.bins:
            if b.upper == upper:
                return b.rate
        return None

    @property
    def uppers(self) -> list[float]:
        return [b.upper for b in self.bins]

    @property
    def rates(self) -> list[float]:
        return [b.rate for b in self.bins]


@dataclass
class HorizonReport:
    eta_per_doubling: list[tuple[float, float]]
    eta_aggregate: float
    reach_wc: float
    invariance_ratio: float | None = None


def pair_seed(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def sample_pairs(d_star: np.ndarray, n_pairs: int, seed: int, min_distance: float = 0.0, include_self: bool = False) -> np.ndarray:
    """Uniformly sample (with replacement) pairs with finite ``d*``.

    Only pairs with ``d*(s, g) >= min_distance`` are eligible; ``s == g`` is
    excluded unless ``include_self``.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    ok = np.isfinite(d_star) & (d_star >= min_distance)
    if not include_self:
        np.fill_diagonal(ok, False)
    s_idx, g_idx = np.nonzero(ok)
    if len(s_idx) == 0:
        raise ValueError(f"no pairs with distance >= {min_distance}")
    pick = np.random.default_rng([seed, 0x5A17]).integers(len(s_idx), size=n_pairs)
    return np.stack([s_idx[pick], g_idx[pick]], axis=1)


def run_pairs(world: GridWorld, policy: Policy, pairs: np.ndarray, d_star: np.ndarray, seed: int, max_steps: int | None = None) -> list[PairOutcome]:
    if max_steps is None:
        max_steps = default_max_steps(world)
    out = []
    for i, (s, g) in enumerate(pairs):
        r = rollout(world, policy, int(s), int(g), max_steps, pair_seed(seed, i))
        out.append(PairOutcome(int(s), int(g), float(d_star[s, g]), r.success, r.steps))
    return out


def curve_from_outcomes(outcomes: list[PairOutcome], bins) -> SuccessCurve:
    """Fold per-pair outcomes into bins labelled by their upper edge.

    A pair at distance ``x`` goes to the first edge ``e`` with ``x <= e``;
    pairs beyond the last edge and empty bins are dropped.
    """
    edges = [float(b) for b in bins]
    if any(b >= a for a, b in zip(edges[1:], edges[:-1])):
        raise ValueError("bin edges must be strictly ascending")
    counts = [[0, 0] for _ in edges]
    for o in outcomes:
        k = int(np.searchsorted(edges, o.distance, side="left"))
        if k < len(edges):
            counts[k][0] += 1
            counts[k][1] += int(o.success)
    curve = [CurveBin(e, n, k) for e, (n, k) in zip(edges, counts) if n > 0]
    return SuccessCurve(curve, list(outcomes))


def stratified_success(
    world: GridWorld,
    policy: Policy,
    d_star: np.ndarray,
    n_pairs: int,
    bins,
    seed: int,
    max_steps: int | None = None,
    include_self: bool = False,
) -> SuccessCurve:
    pairs = sample_pairs(d_star, n_pairs, seed, include_self=include_self)
    return curve_from_outcomes(run_pairs(world, policy, pairs, d_star, seed, max_steps), bins)


def reach_worst_case(eta: float) -> float:
    """Worst-case reach ``1 + eta / (1 - 2 eta)``; infinite once ``eta >= 1/2``."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta >= 0.5:
        return math.inf
    return 1.0 + eta / (1.0 - 2.0 * eta)


def eta_and_reach(curve: SuccessCurve, c0: float) -> HorizonReport:
    """Success ratios per doubling of the horizon, starting at ``c0``.

    Doublings stop at the first missing bin or zero-success denominator. The
    aggregate is the geometric mean of the per-doubling ratios.
    """
    base = curve.rate_at(c0)
    if base is None or base <= 0:
        raise ValueError(f"Success({c0}) must be present and positive")
    ratios = []
    c = c0
    while True:
        now, nxt = curve.rate_at(c), curve.rate_at(2 * c)
        if nxt is None or not now:
            break
        ratios.append((c, nxt / now))
        c *= 2
    if not ratios:
        return HorizonReport([], math.nan, math.nan)
    vals = np.array([r for _, r in ratios])
    if (vals == vals[0]).all():
        agg = float(vals[0])
    elif (vals == 0).any():
        agg = 0.0
    else:
        agg = float(np.exp(np.mean(np.log(vals))))
    return HorizonReport(ratios, agg, reach_worst_case(agg))


@dataclass
class InvarianceResult:
    ratio: float
    success_planned: float
    success_direct: float
    n_pairs: int
    planned: list[PairOutcome] = field(default_factory=list, repr=False)
    direct: list[PairOutcome] = field(default_factory=list, repr=False)


def planning_invariance_ratio(
    world: GridWorld,
    base: Policy,
    planner: Planner,
    d_star: np.ndarray,
    distant_threshold: float,
    n_pairs: int,
    seed: int,
    max_steps: int | None = None,
) -> InvarianceResult:
    """Success with a waypoint planner divided by success without one.

    Both arms use the same sampled pairs with ``d* >= distant_threshold`` and
    the same per-pair seeds. ``0 / 0`` gives ``nan``.
    """
    if distant_threshold <= 0:
        raise ValueError("distant_threshold must be positive")
    pairs = sample_pairs(d_star, n_pairs, seed, min_distance=distant_threshold)
    direct = run_pairs(world, base, pairs, d_star, seed, max_steps)
    planned = run_pairs(world, PlanComposedPolicy(base, planner), pairs, d_star, seed, max_steps)
    sd = float(np.mean([o.success for o in direct]))
    sp = float(np.mean([o.success for o in planned]))
    if sd == 0:
        ratio = math.nan if sp == 0 else math.inf
    else:
        ratio = sp / sd
    return InvarianceResult(ratio, sp, sd, len(pairs), planned, direct)


def scatter_report(methods) -> list[tuple[str, float, float | None]]:
    """Rows of ``(method, eta_aggregate, invariance_ratio)``."""
    return [(name, rep.eta_aggregate, rep.invariance_ratio) for name, rep in methods]


# --- Bellman error -------------------------------------------------------


def td_kl(logits: np.ndarray, next_logits: np.ndarray, next_is_goal: np.ndarray, gamma: float) -> float:
    """Mean over rows of ``KL(td_target || softmax(logits))``.

    ``td_target = (1 - gamma) * next_is_goal + gamma * softmax(next_logits)``,
    with softmax taken across goals (axis 1).
    """
    logits = np.asarray(logits, dtype=float)
    if logits.size == 0:
        raise ValueError("empty batch")
    target = (1.0 - gamma) * np.asarray(next_is_goal, dtype=float) + gamma * softmax(next_logits, axis=1)
    kl = rel_entr(target, softmax(logits, axis=1)).sum(axis=1)
    # KL is nonnegative; rounding can leave a -1e-17 residue at the fixed point
    return max(float(kl.mean()), 0.0)


@dataclass
class Critic:
    """Goal scores for state-action pairs and for states.

    ``action_scores[s, a, g]`` scores the current transition ``(s, a)``;
    ``state_scores[s, g]`` scores the next state.
    """

    action_scores: np.ndarray
    state_scores: np.ndarray

    @classmethod
    def from_distance(cls, world: GridWorld, d: np.ndarray) -> "Critic":
        return cls(-action_distance_from_state(world, d), -np.asarray(d, dtype=float))

    @classmethod
    def exact_occupancy(cls, world: GridWorld, gamma: float) -> "Critic":
        """Log of the random policy's exact discounted future-state occupancy."""
        state_occ, action_occ = random_policy_occupancy(world, gamma)
        with np.errstate(divide="ignore"):
            return cls(np.log(action_occ), np.log(state_occ))

    def corrupted(self, sigma: float, seed: int) -> "Critic":
        """Add ``sigma`` times a fixed standard-normal draw to every score."""
        rng = np.random.default_rng(seed)
        za = rng.standard_normal(self.action_scores.shape)
        zs = rng.standard_normal(self.state_scores.shape)
        return Critic(self.action_scores + sigma * za, self.state_scores + sigma * zs)


def bellman_error(critic: Critic, batch, gamma: float, goals=None) -> float:
    """Bellman error of ``critic`` on transitions ``(s, a, s_next, g_future)``.

    Goals default to the batch's future states. Pass the full state set as
    ``goals`` to make the exact occupancy critic a fixed point.
    """
    batch = np.asarray(batch, dtype=np.int64).reshape(-1, 4)
    if len(batch) == 0:
        raise ValueError("empty batch")
    s, a, s1, xT = batch.T
    goals = xT if goals is None else np.asarray(goals, dtype=np.int64)
    logits = critic.action_scores[s, a][:, goals]
    next_logits = critic.state_scores[s1][:, goals]
    return td_kl(logits, next_logits, s1[:, None] == goals[None, :], gamma)


__all__ = [
    "Critic",
    "CurveBin",
    "HorizonReport",
    "InvarianceResult",
    "PairOutcome",
    "SuccessCurve",
    "bellman_error",
    "curve_from_outcomes",
    "eta_and_reach",
    "planning_invariance_ratio",
    "reach_worst_case",
    "sample_pairs",
    "scatter_report",
    "stratified_success",
    "td_kl",
]
