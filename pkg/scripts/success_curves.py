"""Distance-stratified success for projected vs raw hitting-time policies.

    python scripts/success_curves.py [--out runs/curves]

Writes one run directory per method and a merged report.csv / scatter.csv.
"""
import argparse
from pathlib import Path

from horizongen import experiments
from horizongen.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/curves")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    runs = []
    for name in ("projected", "raw", "random"):
        out = Path(args.out) / name
        cfg = load_config(ROOT / "configs" / f"{name}.ini", {"output_dir": str(out), "seed": str(args.seed)})
        summary = experiments.pipeline(cfg)
        rates = " ".join(f"{b['bin_upper']:g}:{b['success_rate']:.3f}" for b in summary["curve"])
        print(f"{summary['method']:40s} eta={summary['eta_aggregate']} {rates}")
        runs.append(out)
    experiments.report(runs, args.out)
    print(experiments.plot_data(runs), end="")


if __name__ == "__main__":
    main()
