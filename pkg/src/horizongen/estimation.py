"""Temporal distance estimates.

Distance tables are plain ``(n, n)`` float arrays with ``np.inf`` marking
pairs that were never observed (or are unreachable). Action tables have
shape ``(n, num_actions, n)``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .env import NUM_ACTIONS, Action, GridWorld, Trajectory, _stack_by_length, shortest_path_distances


def validate_distance_table(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance table must be square, got shape {d.shape}")
    if np.isnan(d).any():
        raise ValueError("distance table contains NaN")
    if (d < 0).any():
        raise ValueError("distance table has negative entries")
    if (np.diag(d) != 0).any():
        raise ValueError("distance table must have a zero diagonal")
    return d


def empirical_hitting_time(trajectories: Sequence[Trajectory], num_states: int) -> np.ndarray:
    """Mean first-hit time from every occurrence of ``s`` to a later ``g``.

    For each position ``i`` holding state ``s`` and each ``g`` that appears
    later in the same trajectory, the sample is ``min{j > i : x_j = g} - i``.
    Pairs with no sample stay at ``inf``; the diagonal is 0.
    """
    if len(trajectories) == 0:
        raise ValueError("empty dataset")
    n = num_states
    total = np.zeros(n * n)
    count = np.zeros(n * n)
    for S in _stack_by_length(trajectories):
        T = S.shape[1]
        pos = np.arange(T)
        # prev[k, j]: last index before j holding the same state as j, else -1
        same = S[:, :, None] == S[:, None, :]
        earlier = pos[:, None] < pos[None, :]
        prev = np.where(same & earlier, pos[:, None], -1).max(axis=1)
        iu, ju = np.triu_indices(T, 1)
        # (i, j) is a first hit of x_j after i iff x_j does not recur in (i, j)
        first = prev[:, ju] <= iu
        src = S[:, iu][first]
        dst = S[:, ju][first]
        lag = np.broadcast_to(ju - iu, first.shape)[first]
        keep = src != dst
        flat = src[keep] * n + dst[keep]
        total += np.bincount(flat, weights=lag[keep], minlength=n * n)
        count += np.bincount(flat, minlength=n * n)
    d = np.full(n * n, np.inf)
    seen = count > 0
    d[seen] = total[seen] / count[seen]
    d = d.reshape(n, n)
    np.fill_diagonal(d, 0.0)
    return d


def successor_distance_exact(world: GridWorld, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Successor distances of a deterministic gridworld.

    Every state has a no-op self loop, so the optimal log occupancy ratio is
    ``k * log(1/gamma)`` with ``k`` the shortest-path step count. The action
    table scales the one-step lift of the step counts by the same factor.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    unit = np.log(1.0 / gamma)
    steps = shortest_path_distances(world)
    d = steps * unit
    return d, action_distance_from_state(world, d, step_cost=unit)


def action_distance_from_state(world: GridWorld, d: np.ndarray, step_cost: float = 1.0) -> np.ndarray:
    """Lift a state distance to actions.

    ``d(s, a, g) = step_cost + d(step(s, a), g)``, except that a no-op at
    the goal costs 0.
    """
    d = np.asarray(d, dtype=float)
    if (np.diag(d) != 0).any():
        raise ValueError("distance table must have a zero diagonal")
    n = world.num_states
    da = step_cost + d[world.next_state]  # (n, m, n)
    idx = np.arange(n)
    da[idx, int(Action.NOOP), idx] = 0.0
    return da


def random_policy_occupancy(world: GridWorld, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact normalized future-state occupancies of the uniform random policy.

    Returns ``(state_occ, action_occ)`` with

    ``state_occ[s, g] = (1-gamma) * sum_t gamma^t P(x_{t+1} = g | x_0 = s)``
    ``action_occ[s, a, g] = (1-gamma) [step(s,a) = g] + gamma * state_occ[step(s,a), g]``

    Both are probability distributions over ``g``. ``state_occ`` solves the
    linear system ``(I - gamma P) M = (1 - gamma) P``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    n = world.num_states
    P = world.transition_matrix()
    state_occ = np.linalg.solve(np.eye(n) - gamma * P, (1.0 - gamma) * P)
    nxt = world.next_state
    action_occ = (1.0 - gamma) * (nxt[:, :, None] == np.arange(n)) + gamma * state_occ[nxt]
    return state_occ, action_occ


__all__ = [
    "NUM_ACTIONS",
    "action_distance_from_state",
    "empirical_hitting_time",
    "random_policy_occupancy",
    "successor_distance_exact",
    "validate_distance_table",
]
