import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from horizongen.env import bundled_maze, load_maze, shortest_path_distances

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def rooms():
    return bundled_maze("rooms")


@pytest.fixture(scope="session")
def s_maze():
    return bundled_maze("s_maze")


@pytest.fixture(scope="session")
def rooms_dstar(rooms):
    return shortest_path_distances(rooms)


@pytest.fixture(scope="session")
def small_maze():
    return load_maze(
        """
.....
.##..
...#.
.#...
"""
    )


@st.composite
def mazes(draw, max_side=6, connected=True):
    """Random small mazes; with ``connected`` only the component of the first free cell is kept."""
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(2, max_side))
    bits = draw(st.lists(st.booleans(), min_size=h * w, max_size=h * w))
    grid = [["#" if bits[r * w + c] else "." for c in range(w)] for r in range(h)]
    grid[0][0] = "."
    if connected:
        world = load_maze("\n".join("".join(row) for row in grid))
        d = shortest_path_distances(world)
        keep = {world.cell_of(g) for g in np.flatnonzero(np.isfinite(d[0]))}
        for r in range(h):
            for c in range(w):
                if (r, c) not in keep:
                    grid[r][c] = "#"
    return load_maze("\n".join("".join(row) for row in grid))


@st.composite
def distance_tables(draw, max_n=30, allow_inf=True):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    d = rng.integers(1, 20, size=(n, n)).astype(float)
    if allow_inf:
        d[rng.random((n, n)) < 0.3] = np.inf
    np.fill_diagonal(d, 0.0)
    return d


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
