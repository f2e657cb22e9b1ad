"""Goal-conditioned policies, waypoint planners and rollouts.

Policies act on an action-distance table ``d[s, a, g]``. Planners act on a
state-distance table ``d[s, g]``. Every policy exposes ``probs(s, g)`` (the
full action distribution) and ``act(s, g, rng)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .env import NUM_ACTIONS, Action, GridWorld, shortest_path_distances
from .estimation import action_distance_from_state

DEFAULT_BOLTZMANN_COEFF = 0.1


class UnreachableGoalError(ValueError):
    pass


def greedy_action_set(d: np.ndarray, s: int, g: int) -> np.ndarray:
    """Exact argmin over actions of ``d[s, :, g]``, as sorted action ids."""
    row = d[s, :, g]
    best = row.min()
    if not np.isfinite(best):
        raise UnreachableGoalError(f"no finite action distance from {s} to {g}")
    return np.flatnonzero(row == best)


def boltzmann_policy_probs(d: np.ndarray, s: int, g: int, coeff: float) -> np.ndarray:
    """``pi(a | s, g) proportional to exp(-coeff * d[s, a, g])``; inf entries get 0."""
    if coeff <= 0:
        raise ValueError("coefficient must be positive")
    row = d[s, :, g]
    finite = np.isfinite(row)
    if not finite.any():
        raise UnreachableGoalError(f"no finite action distance from {s} to {g}")
    logits = np.full(row.shape, -np.inf)
    logits[finite] = -coeff * (row[finite] - row[finite].min())
    p = np.exp(logits)
    return p / p.sum()


def _uniform() -> np.ndarray:
    return np.full(NUM_ACTIONS, 1.0 / NUM_ACTIONS)


def _one_hot(a: int) -> np.ndarray:
    p = np.zeros(NUM_ACTIONS)
    p[a] = 1.0
    return p


class Policy:
    # True when probs(s, g) is a point mass for every (s, g)
    deterministic = False

    def probs(self, s: int, g: int) -> np.ndarray:
        raise NotImplementedError

    def act(self, s: int, g: int | None, rng: np.random.Generator) -> int:
        return int(rng.choice(NUM_ACTIONS, p=self.probs(s, g)))


class RandomPolicy(Policy):
    """Uniform over actions, whatever the goal."""

    def probs(self, s, g):
        return _uniform()

    def act(self, s, g, rng):
        return int(rng.integers(NUM_ACTIONS))


@dataclass
class FixedActionPolicy(Policy):
    action: int = int(Action.NOOP)
    deterministic = True

    def probs(self, s, g):
        return _one_hot(self.action)

    def act(self, s, g, rng):
        return self.action


@dataclass
class GreedyPolicy(Policy):
    """Greedy in ``d[s, :, g]`` with seeded tie-breaking.

    Ties are resolved by a generator keyed on ``(seed, s, argmin set)``, so
    two goals with the same argmin set at ``s`` get the same action. When
    every action distance is infinite the policy falls back to uniform.
    """

    distance: np.ndarray
    seed: int = 0
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    @cached_property
    def deterministic(self) -> bool:
        # the uniform fallback makes unreachable goals stochastic
        return bool(np.isfinite(self.distance).any(axis=1).all())

    def choose(self, s: int, g: int) -> int | None:
        try:
            options = greedy_action_set(self.distance, s, g)
        except UnreachableGoalError:
            return None
        if len(options) == 1:
            return int(options[0])
        mask = int(sum(1 << int(a) for a in options))
        key = (s, mask)
        if key not in self._cache:
            rng = np.random.default_rng([self.seed, s, mask])
            self._cache[key] = int(options[rng.integers(len(options))])
        return self._cache[key]

    def probs(self, s, g):
        a = self.choose(s, g)
        return _uniform() if a is None else _one_hot(a)

    def act(self, s, g, rng):
        a = self.choose(s, g)
        return int(rng.integers(NUM_ACTIONS)) if a is None else a


@dataclass
class BoltzmannPolicy(Policy):
    """Softmax over ``-coeff * d[s, :, g]``; uniform when every entry is inf."""

    distance: np.ndarray
    coeff: float = DEFAULT_BOLTZMANN_COEFF

    def probs(self, s, g):
        try:
            return boltzmann_policy_probs(self.distance, s, g, self.coeff)
        except UnreachableGoalError:
            return _uniform()

    @cached_property
    def _cumulative(self) -> np.ndarray:
        d = np.moveaxis(np.asarray(self.distance, dtype=float), 1, 2)  # (s, g, a)
        finite = np.isfinite(d)
        best = np.where(finite, d, np.inf).min(axis=2, keepdims=True)
        with np.errstate(invalid="ignore"):
            w = np.where(finite, np.exp(-self.coeff * (d - best)), 0.0)
        dead = ~finite.any(axis=2)
        w[dead] = 1.0
        return np.cumsum(w / w.sum(axis=2, keepdims=True), axis=2)

    def act(self, s, g, rng):
        cum = self._cumulative[s, g]
        return min(int(np.searchsorted(cum, rng.random(), side="right")), NUM_ACTIONS - 1)


@dataclass
class AdversarialPolicy(Policy):
    """Optimal up to horizon ``H``, deliberately wrong at horizon ``H + 1``.

    For pairs with ``d*(s, g) == H + 1`` it takes the first action (in
    ``Action`` order) outside the optimal first-action set; elsewhere it is
    the greedy policy on ``d*``.
    """

    world: GridWorld
    horizon: int
    d_star: np.ndarray
    seed: int = 0
    deterministic = True

    def __post_init__(self):
        self.greedy = GreedyPolicy(action_distance_from_state(self.world, self.d_star), self.seed)

    def is_designated(self, s: int, g: int) -> bool:
        return self.d_star[s, g] == self.horizon + 1

    def choose(self, s: int, g: int) -> int:
        if self.is_designated(s, g):
            optimal = set(greedy_action_set(self.greedy.distance, s, g).tolist())
            return next(a for a in range(NUM_ACTIONS) if a not in optimal)
        a = self.greedy.choose(s, g)
        return int(Action.NOOP) if a is None else a

    def probs(self, s, g):
        return _one_hot(self.choose(s, g))

    def act(self, s, g, rng):
        return self.choose(s, g)


def adversarial_policy(world: GridWorld, H: int, d_star: np.ndarray | None = None, seed: int = 0) -> AdversarialPolicy:
    if d_star is None:
        d_star = shortest_path_distances(world)
    if H < 0 or not (d_star == H + 1).any():
        raise ValueError(f"maze has no pair at distance {H + 1}")
    # with a unit-cost lift the no-op is never optimal off the goal, so every
    # pair at distance H + 1 has a strict optimal subset
    return AdversarialPolicy(world, H, d_star, seed)


@dataclass
class Planner:
    """Waypoint proposal over a state distance table.

    ``kind`` is ``"optimal"`` (uniform over ``argmin_w d(s,w) + d(w,g)``),
    ``"midpoint"`` (uniform over cells within ``slack`` of half the distance
    on both legs, falling back to ``"optimal"`` when none qualify) or
    ``"identity"``. The current state is never proposed unless ``s == g``.
    """

    kind: str
    distance: np.ndarray
    slack: float = 1.0

    def __post_init__(self):
        if self.kind not in ("optimal", "midpoint", "identity"):
            raise ValueError(f"unknown planner kind {self.kind!r}")

    def candidates(self, s: int, g: int) -> np.ndarray:
        d = self.distance
        total = d[s, g]
        if self.kind == "identity" or s == g:
            return np.array([g])
        if not np.isfinite(total):
            raise UnreachableGoalError(f"planner distance from {s} to {g} is infinite")
        if self.kind == "midpoint":
            half = total / 2.0
            ok = (np.abs(d[s, :] - half) <= self.slack) & (np.abs(d[:, g] - half) <= self.slack)
            ok[s] = False
            found = np.flatnonzero(ok)
            if len(found):
                return found
        via = d[s, :] + d[:, g]
        via[s] = np.inf
        best = via.min()
        if not np.isfinite(best):
            return np.array([g])
        return np.flatnonzero(via == best)

    def plan(self, s: int, g: int, rng: np.random.Generator) -> int:
        c = self.candidates(s, g)
        return int(c[0]) if len(c) == 1 else int(c[rng.integers(len(c))])


def plan_waypoint(planner: Planner, s: int, g: int, seed=None) -> int:
    return planner.plan(s, g, np.random.default_rng(seed))


@dataclass
class PlanComposedPolicy(Policy):
    """Condition ``base`` on a freshly planned waypoint at every call.

    Waypoint ties are broken from a private stream seeded by ``seed`` so the
    rollout generator handed to ``act`` only ever drives the base policy.
    """

    base: Policy
    planner: Planner
    seed: int = 0
    _wrng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._wrng = np.random.default_rng(self.seed)

    def probs(self, s, g):
        ws = self.planner.candidates(s, g)
        return np.mean([self.base.probs(s, int(w)) for w in ws], axis=0)

    def act(self, s, g, rng):
        w = self.planner.plan(s, g, self._wrng)
        return self.base.act(s, w, rng)


@dataclass
class RolloutResult:
    success: bool
    steps: int
    visited: list[int]


def default_max_steps(world: GridWorld) -> int:
    return 4 * world.num_states


def rollout(world: GridWorld, policy: Policy, s: int, g: int, max_steps: int | None = None, seed=0) -> RolloutResult:
    """Run ``policy`` from ``s`` until it reaches ``g`` or spends ``max_steps``.

    A deterministic policy that revisits a state can never reach the goal,
    so such rollouts stop early and report ``steps = max_steps``.
    """
    if max_steps is None:
        max_steps = default_max_steps(world)
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    visited = [int(s)]
    seen = {int(s)} if policy.deterministic else None
    while s != g and len(visited) <= max_steps:
        s = world.step(s, policy.act(s, g, rng))
        visited.append(s)
        if seen is not None:
            if s in seen and s != g:
                return RolloutResult(False, max_steps, visited)
            seen.add(s)
    if s == g:
        return RolloutResult(True, len(visited) - 1, visited)
    return RolloutResult(False, max_steps, visited)
