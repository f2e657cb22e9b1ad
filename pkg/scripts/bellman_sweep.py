"""Bellman error of the exact occupancy critic under increasing score noise.

    python scripts/bellman_sweep.py [--config configs/bellman.ini]
"""
import argparse

from horizongen import experiments
from horizongen.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--gamma", type=float, default=None)
    args = ap.parse_args()
    overrides = {} if args.gamma is None else {"gamma": str(args.gamma)}
    cfg = load_config(args.config, overrides)
    print("checkpoint sigma error easy_success distant_success")
    for k, sigma, err, easy, far in experiments.bellman(cfg):
        print(f"{k:10d} {sigma:5g} {err:.3e} {easy:.3f} {far:.3f}")


if __name__ == "__main__":
    main()
