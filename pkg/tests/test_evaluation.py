import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import softmax

from horizongen.control import FixedActionPolicy, GreedyPolicy, Planner, RandomPolicy
from horizongen.env import Action, collect_trajectories
from horizongen.estimation import action_distance_from_state
from horizongen.evaluation import (
    Critic,
    CurveBin,
    PairOutcome,
    SuccessCurve,
    bellman_error,
    curve_from_outcomes,
    eta_and_reach,
    planning_invariance_ratio,
    reach_worst_case,
    run_pairs,
    sample_pairs,
    stratified_success,
    td_kl,
)
from horizongen.experiments import sample_transitions


def curve(rates, uppers=(4, 8, 16, 32)):
    return SuccessCurve([CurveBin(float(u), 1000, int(round(r * 1000))) for u, r in zip(uppers, rates)])


@pytest.mark.parametrize("eta,want", [(0.0, 1.0), (0.1, 1.125), (0.25, 1.5), (0.5, math.inf), (0.9, math.inf)])
def test_reach_worst_case(eta, want):
    assert reach_worst_case(eta) == want


def test_reach_rejects_negative():
    with pytest.raises(ValueError):
        reach_worst_case(-0.1)


def test_eta_constant_ratio_is_exact():
    rep = eta_and_reach(curve([0.8, 0.4, 0.2, 0.1]), 4)
    assert rep.eta_aggregate == 0.5 and rep.reach_wc == math.inf
    assert [c for c, _ in rep.eta_per_doubling] == [4, 8, 16]


def test_eta_geometric_mean_and_zero():
    rep = eta_and_reach(curve([1.0, 0.9, 0.81 * 0.5]), 4)
    assert rep.eta_aggregate == pytest.approx(math.sqrt(0.9 * 0.45))
    rep = eta_and_reach(curve([1.0, 0.5, 0.0, 0.0]), 4)
    assert rep.eta_aggregate == 0.0 and rep.reach_wc == 1.0
    # doublings stop at the first zero numerator
    assert len(rep.eta_per_doubling) == 2


def test_eta_needs_base_bin():
    with pytest.raises(ValueError):
        eta_and_reach(curve([0.0, 1.0]), 4)
    with pytest.raises(ValueError):
        eta_and_reach(curve([1.0]), 3)
    assert math.isnan(eta_and_reach(curve([1.0]), 4).eta_aggregate)


def test_curve_binning_edges():
    outs = [PairOutcome(0, 1, d, ok, 1) for d, ok in [(1, True), (4, False), (5, True), (8, True), (9, False), (99, True)]]
    c = curve_from_outcomes(outs, [4, 8, 16])
    assert c.uppers == [4, 8, 16]
    assert [b.n_pairs for b in c.bins] == [2, 2, 1]
    assert c.rates == [0.5, 1.0, 0.0]
    assert curve_from_outcomes(outs, [2, 4, 8, 16]).uppers == [2, 4, 8, 16]
    assert 3.0 not in curve_from_outcomes(outs, [2, 3, 4]).uppers
    with pytest.raises(ValueError):
        curve_from_outcomes(outs, [4, 4])


def test_sample_pairs(rooms_dstar):
    p = sample_pairs(rooms_dstar, 500, seed=3)
    np.testing.assert_array_equal(p, sample_pairs(rooms_dstar, 500, seed=3))
    assert (p[:, 0] != p[:, 1]).all()
    far = sample_pairs(rooms_dstar, 200, seed=3, min_distance=32)
    assert (rooms_dstar[far[:, 0], far[:, 1]] >= 32).all()
    with pytest.raises(ValueError):
        sample_pairs(rooms_dstar, 5, 0, min_distance=1e6)


def test_stratified_success_of_noop_is_zero(rooms, rooms_dstar):
    c = stratified_success(rooms, FixedActionPolicy(int(Action.NOOP)), rooms_dstar, 50, [8, 64], seed=0)
    assert all(r == 0.0 for r in c.rates)
    assert sum(b.n_pairs for b in c.bins) <= 50


def test_invariance_ratio_edge_cases(rooms, rooms_dstar):
    noop = FixedActionPolicy(int(Action.NOOP))
    res = planning_invariance_ratio(rooms, noop, Planner("optimal", rooms_dstar), rooms_dstar, 32, 20, 0, 100)
    assert math.isnan(res.ratio)
    assert res.n_pairs == 20 and len(res.planned) == len(res.direct) == 20
    with pytest.raises(ValueError):
        planning_invariance_ratio(rooms, noop, Planner("optimal", rooms_dstar), rooms_dstar, 0, 20, 0)


def test_invariance_ratio_random_is_exactly_one(rooms, rooms_dstar):
    res = planning_invariance_ratio(rooms, RandomPolicy(), Planner("midpoint", rooms_dstar), rooms_dstar, 32, 40, 5)
    assert res.ratio == 1.0 or math.isnan(res.ratio)
    assert [o.steps for o in res.planned] == [o.steps for o in res.direct]


def test_run_pairs_records_distance(rooms, rooms_dstar):
    pairs = np.array([[0, 10], [10, 0]])
    outs = run_pairs(rooms, GreedyPolicy(action_distance_from_state(rooms, rooms_dstar)), pairs, rooms_dstar, 0)
    assert [o.distance for o in outs] == [rooms_dstar[0, 10], rooms_dstar[10, 0]]
    assert all(o.success and o.steps == o.distance for o in outs)


# --- Bellman error ---


def test_td_kl_zero_when_logits_match_target():
    rng = np.random.default_rng(0)
    nxt = rng.normal(size=(4, 6))
    goal = np.eye(6)[[0, 2, 2, 5]]
    target = 0.1 * goal + 0.9 * softmax(nxt, axis=1)
    assert td_kl(np.log(target), nxt, goal, 0.9) == pytest.approx(0.0, abs=1e-12)
    assert td_kl(np.zeros((4, 6)), nxt, goal, 0.9) > 0
    with pytest.raises(ValueError):
        td_kl(np.zeros((0, 6)), np.zeros((0, 6)), np.zeros((0, 6)), 0.9)


@given(st.integers(0, 2**16), st.floats(0.05, 0.95))
def test_td_kl_nonnegative(seed, gamma):
    rng = np.random.default_rng(seed)
    logits, nxt = rng.normal(size=(2, 3, 5)) * 3
    goal = np.eye(5)[rng.integers(5, size=3)]
    assert td_kl(logits, nxt, goal, gamma) >= -1e-12


@pytest.fixture(scope="module")
def bellman_batch(s_maze):
    trajs, _ = collect_trajectories(s_maze, RandomPolicy(), 300, 10, 0)
    return sample_transitions(trajs, 256, 0)


def test_exact_critic_is_fixed_point(s_maze, bellman_batch):
    critic = Critic.exact_occupancy(s_maze, 0.9)
    goals = np.arange(s_maze.num_states)
    assert bellman_error(critic, bellman_batch, 0.9, goals) < 1e-9


def test_noise_increases_bellman_error(s_maze, bellman_batch):
    critic = Critic.exact_occupancy(s_maze, 0.9)
    goals = np.arange(s_maze.num_states)
    errs = [bellman_error(critic.corrupted(sig, 0), bellman_batch, 0.9, goals) for sig in (0.01, 0.05, 0.1, 0.5)]
    assert all(a < b for a, b in zip(errs, errs[1:]))


def test_batch_goals_default(s_maze, bellman_batch):
    critic = Critic.exact_occupancy(s_maze, 0.9)
    assert bellman_error(critic, bellman_batch, 0.9) >= 0.0
    with pytest.raises(ValueError):
        bellman_error(critic, np.empty((0, 4)), 0.9)


def test_sample_transitions_are_real_steps(s_maze):
    trajs, _ = collect_trajectories(s_maze, RandomPolicy(), 50, 10, 1)
    batch = sample_transitions(trajs, 100, 1)
    for s, a, s1, _ in batch:
        assert s_maze.step(s, a) == s1


def test_critic_from_distance(small_maze):
    from horizongen.env import shortest_path_distances

    d = shortest_path_distances(small_maze)
    c = Critic.from_distance(small_maze, d)
    np.testing.assert_array_equal(c.state_scores, -d)
    assert c.action_scores.shape == (small_maze.num_states, 5, small_maze.num_states)
