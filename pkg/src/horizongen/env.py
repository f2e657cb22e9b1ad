"""Deterministic tabular gridworld.

States are the free cells of an ASCII maze, numbered in row-major order.
Five actions are available everywhere; moves into walls or off the grid
leave the agent where it is.
"""
from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

WALL = "#"
FREE = "."


class Action(enum.IntEnum):
    NORTH = 0
    SOUTH = 1
    EAST = 2
    WEST = 3
    NOOP = 4


NUM_ACTIONS = len(Action)

_DELTAS = {
    Action.NORTH: (-1, 0),
    Action.SOUTH: (1, 0),
    Action.EAST: (0, 1),
    Action.WEST: (0, -1),
    Action.NOOP: (0, 0),
}


class MazeError(ValueError):
    pass


class GridWorld:
    """Immutable gridworld with a precomputed transition table.

    ``next_state[s, a]`` is the successor of state ``s`` under action ``a``.
    """

    def __init__(self, width: int, height: int, walls):
        if width <= 0 or height <= 0:
            raise MazeError("grid dimensions must be positive")
        self.width = int(width)
        self.height = int(height)
        self.walls = frozenset((int(r), int(c)) for r, c in walls)
        self.cells = tuple(
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if (r, c) not in self.walls
        )
        if not self.cells:
            raise MazeError("maze has no free cells")
        self._index = {cell: i for i, cell in enumerate(self.cells)}

        nxt = np.empty((len(self.cells), NUM_ACTIONS), dtype=np.int64)
        for s, (r, c) in enumerate(self.cells):
            for a, (dr, dc) in _DELTAS.items():
                nxt[s, a] = self._index.get((r + dr, c + dc), s)
        nxt.setflags(write=False)
        self.next_state = nxt

    @property
    def num_states(self) -> int:
        return len(self.cells)

    def state_of(self, cell) -> int:
        return self._index[tuple(cell)]

    def cell_of(self, s: int) -> tuple[int, int]:
        return self.cells[s]

    def step(self, s: int, a) -> int:
        return int(self.next_state[s, int(a)])

    def render(self) -> str:
        rows = []
        for r in range(self.height):
            rows.append(
                "".join(WALL if (r, c) in self.walls else FREE for c in range(self.width))
            )
        return "\n".join(rows) + "\n"

    def transition_matrix(self, action_probs: np.ndarray | None = None) -> np.ndarray:
        """State-to-state transition matrix under a goal-free policy.

        ``action_probs`` has shape ``(num_states, NUM_ACTIONS)``; defaults to
        the uniform random policy.
        """
        n = self.num_states
        if action_probs is None:
            action_probs = np.full((n, NUM_ACTIONS), 1.0 / NUM_ACTIONS)
        P = np.zeros((n, n))
        rows = np.repeat(np.arange(n), NUM_ACTIONS)
        np.add.at(P, (rows, self.next_state.ravel()), action_probs.ravel())
        return P

    def is_connected(self) -> bool:
        return bool(np.isfinite(shortest_path_distances(self)[0]).all())

    def __eq__(self, other):
        if not isinstance(other, GridWorld):
            return NotImplemented
        return (self.width, self.height, self.walls) == (other.width, other.height, other.walls)

    def __hash__(self):
        return hash((self.width, self.height, self.walls))

    def __repr__(self):
        return f"GridWorld({self.height}x{self.width}, states={self.num_states})"


def load_maze(text: str) -> GridWorld:
    """Parse an ASCII maze made of ``#`` (wall) and ``.`` (free) characters."""
    lines = [line.rstrip() for line in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    while lines and not lines[0]:
        lines.pop(0)
    if not lines:
        raise MazeError("empty maze")
    width = len(lines[0])
    walls = []
    for r, line in enumerate(lines):
        if len(line) != width:
            raise MazeError(f"row {r} has length {len(line)}, expected {width}")
        for c, ch in enumerate(line):
            if ch == WALL:
                walls.append((r, c))
            elif ch != FREE:
                raise MazeError(f"illegal character {ch!r} at row {r}, column {c}")
    return GridWorld(width, len(lines), walls)


def load_maze_file(path) -> GridWorld:
    return load_maze(Path(path).read_text(encoding="utf-8"))


BUNDLED_MAZES = ("rooms", "s_maze")


def bundled_maze_text(name: str) -> str:
    if name not in BUNDLED_MAZES:
        raise KeyError(f"unknown bundled maze {name!r}; choose from {BUNDLED_MAZES}")
    return resources.files("horizongen.mazes").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def bundled_maze(name: str) -> GridWorld:
    return load_maze(bundled_maze_text(name))


def resolve_maze(name_or_path: str) -> GridWorld:
    """Load a maze from a bundled name or a file path."""
    if name_or_path in BUNDLED_MAZES:
        return bundled_maze(name_or_path)
    return load_maze_file(name_or_path)


def shortest_path_distances(world: GridWorld) -> np.ndarray:
    """All-pairs step counts by breadth-first search; unreachable pairs are inf."""
    n = world.num_states
    # reverse adjacency so each BFS runs backwards from the goal
    preds: list[set[int]] = [set() for _ in range(n)]
    for s in range(n):
        for s2 in world.next_state[s]:
            if s2 != s:
                preds[int(s2)].add(s)
    dist = np.full((n, n), np.inf)
    for g in range(n):
        col = dist[:, g]
        col[g] = 0.0
        queue = deque([g])
        while queue:
            x = queue.popleft()
            for p in preds[x]:
                if col[p] == np.inf:
                    col[p] = col[x] + 1.0
                    queue.append(p)
    return dist


@dataclass
class Trajectory:
    states: np.ndarray
    actions: np.ndarray

    def __len__(self):
        return len(self.actions)


@dataclass
class DatasetMeta:
    num_trajectories: int
    trajectory_length: int
    seed: int
    coverage_fraction: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetMeta":
        return cls(**json.loads(text))


class ActionSampler(Protocol):
    def act(self, s: int, g: int | None, rng: np.random.Generator) -> int: ...


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """PCG64 stream for one trajectory, derived from ``(seed, index)`` only."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def collect_trajectories(
    world: GridWorld,
    policy: ActionSampler,
    n: int,
    length: int,
    seed: int,
) -> tuple[list[Trajectory], DatasetMeta]:
    """Roll out ``n`` goal-free trajectories of ``length`` actions each.

    Start states are uniform over free cells. Trajectory ``i`` uses its own
    generator keyed by ``(seed, i)`` so the result does not depend on the
    order in which trajectories are produced.
    """
    if n < 1 or length < 1:
        raise ValueError("need n >= 1 and length >= 1")
    trajs = []
    for i in range(n):
        rng = trajectory_rng(seed, i)
        s = int(rng.integers(world.num_states))
        states = np.empty(length + 1, dtype=np.int64)
        actions = np.empty(length, dtype=np.int64)
        states[0] = s
        for t in range(length):
            a = int(policy.act(s, None, rng))
            s = world.step(s, a)
            actions[t] = a
            states[t + 1] = s
        trajs.append(Trajectory(states, actions))
    meta = DatasetMeta(
        num_trajectories=n,
        trajectory_length=length,
        seed=int(seed),
        coverage_fraction=coverage_fraction(trajs, world.num_states),
    )
    return trajs, meta


def cooccurrence_matrix(trajectories: Sequence[Trajectory], num_states: int) -> np.ndarray:
    """Boolean ``seen[s, g]``: ``s`` occurs strictly before ``g`` in some trajectory."""
    seen = np.zeros((num_states, num_states), dtype=bool)
    for states in _stack_by_length(trajectories):
        T = states.shape[1]
        iu, ju = np.triu_indices(T, 1)
        seen[states[:, iu].ravel(), states[:, ju].ravel()] = True
    return seen


def coverage_fraction(trajectories: Sequence[Trajectory], num_states: int) -> float:
    """Fraction of ordered pairs ``s != g`` that co-occur with ``s`` first."""
    if num_states < 2:
        return 1.0
    seen = cooccurrence_matrix(trajectories, num_states)
    np.fill_diagonal(seen, False)
    return float(seen.sum()) / (num_states * (num_states - 1))


def _stack_by_length(trajectories: Sequence[Trajectory]):
    groups: dict[int, list[np.ndarray]] = {}
    for tr in trajectories:
        groups.setdefault(len(tr.states), []).append(np.asarray(tr.states))
    for T in sorted(groups):
        yield np.stack(groups[T])


def replay(world: GridWorld, traj: Trajectory) -> bool:
    """True when the recorded actions reproduce the recorded states."""
    s = int(traj.states[0])
    for a, s_next in zip(traj.actions, traj.states[1:]):
        s = world.step(s, a)
        if s != s_next:
            return False
    return True
