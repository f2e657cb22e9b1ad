"""Command line entry point.

    horizongen <command> [--config FILE] [--set key=value ...]

Exit status: 0 on success, 1 for configuration errors, 2 for runtime errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments
from .config import ConfigError, load_config

log = logging.getLogger("horizongen")


def _overrides(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _cfg(args):
    overrides = _overrides(args.set)
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    return load_config(args.config, overrides)


def cmd_generate(args):
    cfg = _cfg(args)
    _, meta = experiments.generate(cfg)
    print(f"wrote {cfg.num_trajectories} trajectories to {cfg.output_dir} (coverage {meta.coverage_fraction:.4f})")


def cmd_estimate(args):
    cfg = _cfg(args)
    d = experiments.estimate(cfg)
    print(f"wrote {d.shape[0]}x{d.shape[0]} {cfg.estimator} table to {cfg.output_dir}")


def cmd_project(args):
    cfg = _cfg(args)
    table, before = experiments.project(cfg)
    print(f"triangle violations: {before} before, 0 after; certified={table.certified}")


def cmd_evaluate(args):
    cfg = _cfg(args)
    ev = experiments.evaluate(cfg)
    for b in ev["curve"].bins:
        print(f"{b.upper:8g} {b.n_pairs:6d} {b.rate:.4f}")
    rep = ev["report"]
    print(f"eta={rep.eta_aggregate:.4f} reach_wc={rep.reach_wc}")


def cmd_invariance(args):
    cfg = _cfg(args)
    res = experiments.invariance(cfg)
    if res is None:
        raise ConfigError("invariance needs a planner (set planner=optimal or planner=midpoint)")
    print(f"ratio={res.ratio:.4f} planned={res.success_planned:.4f} direct={res.success_direct:.4f} n={res.n_pairs}")


def cmd_pipeline(args):
    cfg = _cfg(args)
    summary = experiments.pipeline(cfg)
    print(json.dumps({k: summary[k] for k in ("method", "eta_aggregate", "reach_wc", "invariance_ratio")}))


def cmd_bellman(args):
    cfg = _cfg(args)
    for row in experiments.bellman(cfg):
        print("checkpoint={} sigma={} error={:.3e} easy={:.3f} distant={:.3f}".format(*row))


def cmd_report(args):
    rows = experiments.report(args.runs, args.output_dir or ".")
    for method, eta, ratio in rows:
        print(f"{method}\t{eta}\t{ratio}")


def cmd_plot_data(args):
    sys.stdout.write(experiments.plot_data(args.runs))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="horizongen", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="INI file with an [experiment] section")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--output-dir", help="shorthand for --set output_dir=...")
        p.set_defaults(func=func)
        return p

    with_config("generate", cmd_generate, "collect random-policy trajectories")
    with_config("estimate", cmd_estimate, "estimate temporal distances")
    with_config("project", cmd_project, "project distances onto a quasimetric")
    with_config("evaluate", cmd_evaluate, "distance-stratified success and eta")
    with_config("invariance", cmd_invariance, "success ratio with and without planning")
    with_config("pipeline", cmd_pipeline, "run every stage and write summary.json")
    with_config("bellman", cmd_bellman, "Bellman error of exact and noisy critics")
    for name, func, help in [
        ("report", cmd_report, "merge run summaries into report.csv and scatter.csv"),
        ("plot-data", cmd_plot_data, "print gnuplot-ready success curves"),
    ]:
        p = sub.add_parser(name, help=help)
        p.add_argument("runs", nargs="+", help="run directories")
        p.add_argument("--output-dir")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any stage failure maps to exit 2
        log.debug("runtime error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
