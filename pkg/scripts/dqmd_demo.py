"""Transport distance between two state distributions on a bundled maze.

    python scripts/dqmd_demo.py --maze rooms --from 0 1 2 --to 300 301
"""
import argparse

from horizongen import io
from horizongen.env import bundled_maze, shortest_path_distances
from horizongen.otdist import DiscreteDistribution, dqmd
from horizongen.quasimetric import certify


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--maze", default="rooms")
    ap.add_argument("--from", dest="src", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--to", dest="dst", type=int, nargs="+", default=[300, 301])
    args = ap.parse_args()
    cost = certify(shortest_path_distances(bundled_maze(args.maze)))
    P, Q = DiscreteDistribution.uniform(args.src), DiscreteDistribution.uniform(args.dst)
    forward, plan = dqmd(P, Q, cost)
    backward, _ = dqmd(Q, P, cost)
    print(io.transport_json(forward, plan), end="")
    print(f"forward={forward:g} backward={backward:g}")


if __name__ == "__main__":
    main()
