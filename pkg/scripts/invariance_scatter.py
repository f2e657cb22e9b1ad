"""Planning-invariance ratio against eta for several policies on one maze.

    python scripts/invariance_scatter.py [--out runs/scatter]
"""
import argparse
from pathlib import Path

from horizongen import experiments
from horizongen.config import load_config

VARIANTS = {
    "projected/boltzmann": {"project": "true", "policy": "boltzmann"},
    "raw/boltzmann": {"project": "false", "policy": "boltzmann"},
    "projected/greedy": {"project": "true", "policy": "greedy"},
    "raw/greedy": {"project": "false", "policy": "greedy"},
    "successor/greedy": {"estimator": "successor_exact", "project": "false", "policy": "greedy"},
    "random": {"policy": "random"},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/scatter")
    ap.add_argument("--maze", default="rooms")
    args = ap.parse_args()

    runs = []
    for name, overrides in VARIANTS.items():
        out = Path(args.out) / name.replace("/", "_")
        cfg = load_config(None, {**overrides, "maze": args.maze, "method": name, "output_dir": str(out)})
        experiments.pipeline(cfg)
        runs.append(out)
    for method, eta, ratio in experiments.report(runs, args.out):
        print(f"{method:22s} eta={eta} invariance={ratio}")


if __name__ == "__main__":
    main()
