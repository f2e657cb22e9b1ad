import math

import numpy as np
import pytest

from horizongen.env import shortest_path_distances
from horizongen.otdist import (
    MAX_SUPPORT,
    DiscreteDistribution,
    SupportTooLargeError,
    dqmd,
    triangle_witness,
)
from horizongen.quasimetric import QuasimetricTable, certify, path_relaxation_closure

from oracles import transport_oracle


@pytest.fixture(scope="module")
def cost(rooms):
    return certify(shortest_path_distances(rooms))


def random_dist(rng, n, size):
    support = rng.choice(n, size=size, replace=False)
    return DiscreteDistribution.from_weights(support, rng.random(size) + 0.05)


def test_distribution_validation():
    with pytest.raises(ValueError):
        DiscreteDistribution((0, 1), (0.5,))
    with pytest.raises(ValueError):
        DiscreteDistribution((0, 0), (0.5, 0.5))
    with pytest.raises(ValueError):
        DiscreteDistribution((0, 1), (1.5, -0.5))
    with pytest.raises(ValueError):
        DiscreteDistribution((0, 1), (0.5, 0.6))
    d = DiscreteDistribution.from_weights([3, 4, 5], [1, 0, 3])
    assert d.support == (3, 5) and d.probs == (0.25, 0.75)
    np.testing.assert_allclose(DiscreteDistribution.uniform([1, 2]).dense(4), [0, 0.5, 0.5, 0])


def test_requires_certified_cost(rooms):
    d = shortest_path_distances(rooms)
    P = DiscreteDistribution.dirac(0)
    with pytest.raises(ValueError):
        dqmd(P, P, QuasimetricTable(d))
    with pytest.raises(TypeError):
        dqmd(P, P, d)


def test_identity_and_dirac(cost):
    rng = np.random.default_rng(0)
    for _ in range(20):
        P = random_dist(rng, cost.n, 6)
        v, plan = dqmd(P, P, cost)
        assert v < 1e-9 and plan.dual_gap < 1e-9
    for s, g in rng.integers(cost.n, size=(20, 2)):
        v, _ = dqmd(DiscreteDistribution.dirac(s), DiscreteDistribution.dirac(g), cost)
        assert v == cost.values[s, g]


def test_matches_vertex_enumeration(cost):
    rng = np.random.default_rng(1)
    for _ in range(30):
        P, Q = random_dist(rng, cost.n, 3), random_dist(rng, cost.n, 3)
        v, _ = dqmd(P, Q, cost)
        want = transport_oracle(np.array(P.probs), np.array(Q.probs), cost.values[np.ix_(P.support, Q.support)])
        assert v == pytest.approx(want, abs=1e-9)


def test_marginals_and_certificate(cost):
    rng = np.random.default_rng(2)
    for _ in range(30):
        P, Q = random_dist(rng, cost.n, 8), random_dist(rng, cost.n, 5)
        v, plan = dqmd(P, Q, cost)
        np.testing.assert_allclose(plan.coupling.sum(axis=1), P.probs, atol=1e-9)
        np.testing.assert_allclose(plan.coupling.sum(axis=0), Q.probs, atol=1e-9)
        assert (plan.coupling >= 0).all()
        assert plan.dual_gap < 1e-9
        assert v == pytest.approx(sum(m * cost.values[p, q] for p, q, m in plan.nonzeros()), abs=1e-9)


def test_triangle_over_random_triples(cost):
    rng = np.random.default_rng(3)
    for _ in range(50):
        P, Q, R = (random_dist(rng, cost.n, int(k)) for k in rng.integers(1, 7, size=3))
        lhs, rhs = triangle_witness(P, Q, R, cost)
        assert lhs <= rhs + 1e-6


def test_asymmetric_cost_gives_asymmetric_distance():
    d = np.array([[0, 1, 2], [5, 0, 1], [5, 5, 0]], dtype=float)
    cost = certify(d)
    P, Q = DiscreteDistribution.dirac(0), DiscreteDistribution.uniform([1, 2])
    assert dqmd(P, Q, cost)[0] == pytest.approx(1.5)
    assert dqmd(Q, P, cost)[0] == pytest.approx(5.0)


def test_infinite_costs():
    d = np.array([[0, 1, np.inf], [np.inf, 0, np.inf], [np.inf, np.inf, 0]])
    cost = path_relaxation_closure(d)
    certify(cost)
    P = DiscreteDistribution.dirac(0)
    assert dqmd(P, DiscreteDistribution.dirac(2), cost)[0] == math.inf
    v, plan = dqmd(DiscreteDistribution.uniform([0, 2]), DiscreteDistribution.uniform([1, 2]), cost)
    assert v == pytest.approx(0.5)
    assert plan.coupling[1, 0] == 0


def test_support_cap(cost):
    big = DiscreteDistribution.uniform(range(MAX_SUPPORT + 1))
    with pytest.raises(SupportTooLargeError):
        dqmd(big, DiscreteDistribution.dirac(0), cost)
