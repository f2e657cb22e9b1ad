"""Experiment stages shared by the CLI and the scripts.

Each stage reads its inputs from ``cfg.output_dir`` when a previous stage
left them there, and computes them inline otherwise.
"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig
from .control import (
    BoltzmannPolicy,
    GreedyPolicy,
    Planner,
    RandomPolicy,
    adversarial_policy,
    default_max_steps,
)
from .env import collect_trajectories, resolve_maze, shortest_path_distances
from .estimation import action_distance_from_state, empirical_hitting_time, successor_distance_exact
from .evaluation import (
    Critic,
    HorizonReport,
    bellman_error,
    curve_from_outcomes,
    eta_and_reach,
    planning_invariance_ratio,
    run_pairs,
    sample_pairs,
    scatter_report,
)
from .quasimetric import audit_quasimetric, path_relaxation_closure, short_pair_restriction

log = logging.getLogger(__name__)

DATASET = "dataset.csv"
DISTANCES = "distances.csv"
QUASIMETRIC = "quasimetric.csv"
PAIRS = "pairs.csv"
CURVE = "curve.csv"
INVARIANCE = "invariance.csv"
REPORT = "report.csv"
SCATTER = "scatter.csv"
BELLMAN = "bellman.csv"
SUMMARY = "summary.json"
RESOLVED = "config.resolved.ini"


def out_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / RESOLVED).write_text(cfg.to_ini(), encoding="utf-8")
    return path


def max_steps(cfg, world) -> int:
    return cfg.max_steps or default_max_steps(world)


def generate(cfg: ExperimentConfig):
    world = resolve_maze(cfg.maze)
    trajs, meta = collect_trajectories(world, RandomPolicy(), cfg.num_trajectories, cfg.trajectory_length, cfg.seed)
    meta.extra["maze"] = cfg.maze
    io.write_dataset(out_dir(cfg) / DATASET, trajs, meta)
    return trajs, meta


def load_or_generate(cfg):
    path = Path(cfg.output_dir) / DATASET
    if path.exists():
        return io.read_dataset(path)
    return generate(cfg)


def estimate(cfg: ExperimentConfig) -> np.ndarray:
    world = resolve_maze(cfg.maze)
    if cfg.estimator == "hitting_time":
        trajs, _ = load_or_generate(cfg)
        d = empirical_hitting_time(trajs, world.num_states)
    else:
        d, _ = successor_distance_exact(world, cfg.gamma)
    io.write_distance_csv(out_dir(cfg) / DISTANCES, d)
    return d


def load_or_estimate(cfg) -> np.ndarray:
    path = Path(cfg.output_dir) / DISTANCES
    return io.read_distance_csv(path) if path.exists() else estimate(cfg)


def project(cfg: ExperimentConfig):
    d = load_or_estimate(cfg)
    if cfg.short_pair_threshold > 0:
        d = short_pair_restriction(d, cfg.short_pair_threshold)
    before = len(audit_quasimetric(d))
    table = path_relaxation_closure(d)
    after = audit_quasimetric(table)
    io.write_quasimetric(
        out_dir(cfg) / QUASIMETRIC,
        table,
        {"violations_before": before, "violations_after": len(after)},
    )
    return table, before


def policy_distance(cfg) -> np.ndarray | None:
    """State table the policy acts on, or ``None`` for goal-free policies."""
    if cfg.policy in ("random", "adversarial"):
        return None
    if cfg.project:
        path = Path(cfg.output_dir) / QUASIMETRIC
        return io.read_quasimetric(path).values if path.exists() else project(cfg)[0].values
    d = load_or_estimate(cfg)
    if cfg.short_pair_threshold > 0:
        d = short_pair_restriction(d, cfg.short_pair_threshold)
    return d


def build_policy(cfg, world, d_state, d_star):
    if cfg.policy == "random":
        return RandomPolicy()
    if cfg.policy == "adversarial":
        return adversarial_policy(world, cfg.H, d_star, cfg.policy_seed)
    step_cost = np.log(1.0 / cfg.gamma) if cfg.estimator == "successor_exact" else 1.0
    d_action = action_distance_from_state(world, d_state, step_cost)
    if cfg.policy == "greedy":
        return GreedyPolicy(d_action, cfg.policy_seed)
    return BoltzmannPolicy(d_action, cfg.coeff)


def build_planner(cfg, d_state, d_star) -> Planner | None:
    if cfg.planner == "none":
        return None
    d = d_star if cfg.planner_distance == "true" or d_state is None else d_state
    return Planner(cfg.planner, d, cfg.slack)


def _report_rows(method, rep: HorizonReport):
    rows = [(method, c, eta, rep.eta_aggregate, rep.reach_wc, rep.invariance_ratio) for c, eta in rep.eta_per_doubling]
    if not rows:
        rows = [(method, math.nan, math.nan, rep.eta_aggregate, rep.reach_wc, rep.invariance_ratio)]
    return [tuple(math.nan if x is None else x for x in r) for r in rows]


def evaluate(cfg: ExperimentConfig) -> dict:
    world = resolve_maze(cfg.maze)
    d_star = shortest_path_distances(world)
    d_state = policy_distance(cfg)
    policy = build_policy(cfg, world, d_state, d_star)
    steps = max_steps(cfg, world)
    pairs = sample_pairs(d_star, cfg.n_pairs, cfg.eval_seed)
    outcomes = run_pairs(world, policy, pairs, d_star, cfg.eval_seed, steps)
    curve = curve_from_outcomes(outcomes, cfg.bins)
    out = out_dir(cfg)
    io.write_rows(out / PAIRS, ["s", "g", "distance", "success", "steps"],
                  [(o.s, o.g, o.distance, int(o.success), o.steps) for o in outcomes])
    io.write_rows(out / CURVE, ["bin_upper", "n_pairs", "success_rate"],
                  [(b.upper, b.n_pairs, b.rate) for b in curve.bins])
    try:
        rep = eta_and_reach(curve, cfg.c0)
    except ValueError as exc:
        log.warning("eta undefined: %s", exc)
        rep = HorizonReport([], math.nan, math.nan)
    return {"curve": curve, "report": rep, "max_steps": steps}


def invariance(cfg: ExperimentConfig):
    world = resolve_maze(cfg.maze)
    d_star = shortest_path_distances(world)
    d_state = policy_distance(cfg)
    planner = build_planner(cfg, d_state, d_star)
    if planner is None:
        return None
    policy = build_policy(cfg, world, d_state, d_star)
    res = planning_invariance_ratio(
        world, policy, planner, d_star, cfg.distant_threshold, cfg.invariance_pairs, cfg.eval_seed, max_steps(cfg, world)
    )
    io.write_rows(
        out_dir(cfg) / INVARIANCE,
        ["s", "g", "distance", "direct_success", "planned_success"],
        [(a.s, a.g, a.distance, int(a.success), int(b.success)) for a, b in zip(res.direct, res.planned)],
    )
    return res


def _finite(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    return x if math.isfinite(x) else "inf"


def pipeline(cfg: ExperimentConfig) -> dict:
    """estimate -> project -> policy -> success curve -> eta/reach -> invariance."""
    out = out_dir(cfg)
    summary: dict = {"method": cfg.method_name, "maze": cfg.maze, "seed": cfg.seed}
    if cfg.policy not in ("random", "adversarial"):
        if cfg.estimator == "hitting_time":
            _, meta = load_or_generate(cfg)
            summary["coverage_fraction"] = meta.coverage_fraction if meta else None
        raw = load_or_estimate(cfg)
        summary["raw_triangle_violations"] = len(audit_quasimetric(raw))
        if cfg.project:
            table, _ = project(cfg)
            summary["certified"] = table.certified
    ev = evaluate(cfg)
    rep: HorizonReport = ev["report"]
    inv = invariance(cfg)
    if inv is not None:
        rep.invariance_ratio = inv.ratio
        summary["invariance"] = {
            "ratio": _finite(inv.ratio),
            "success_planned": inv.success_planned,
            "success_direct": inv.success_direct,
            "n_pairs": inv.n_pairs,
        }
    summary["max_steps"] = ev["max_steps"]
    summary["curve"] = [{"bin_upper": b.upper, "n_pairs": b.n_pairs, "successes": b.successes, "success_rate": b.rate}
                        for b in ev["curve"].bins]
    summary["eta_per_doubling"] = [[c, e] for c, e in rep.eta_per_doubling]
    summary["eta_aggregate"] = _finite(rep.eta_aggregate)
    summary["reach_wc"] = _finite(rep.reach_wc)
    summary["invariance_ratio"] = _finite(rep.invariance_ratio)
    io.write_rows(out / REPORT, ["method", "c", "eta_c", "eta_aggregate", "reach_wc", "invariance_ratio"],
                  _report_rows(cfg.method_name, rep))
    rows = scatter_report([(cfg.method_name, rep)])
    io.write_rows(out / SCATTER, ["method", "eta_aggregate", "invariance_ratio"],
                  [(m, e, math.nan if r is None else r) for m, e, r in rows])
    (out / SUMMARY).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


def bellman(cfg: ExperimentConfig) -> list[tuple]:
    """Bellman error of the exact occupancy critic and of noisy copies of it.

    The noise sweep stands in for training checkpoints. Success columns use
    a greedy policy on the critic's negated action scores.
    """
    world = resolve_maze(cfg.bellman_maze)
    trajs, _ = collect_trajectories(world, RandomPolicy(), cfg.bellman_trajectories, cfg.bellman_length, cfg.seed)
    batch = sample_transitions(trajs, cfg.bellman_batch, cfg.seed)
    if len(batch) == 0:
        raise ValueError("dataset has no transitions")
    exact = Critic.exact_occupancy(world, cfg.gamma)
    goals = np.arange(world.num_states)
    d_star = shortest_path_distances(world)
    easy_cut = d_star[np.isfinite(d_star)].max() / 2.0
    easy = sample_pairs(np.where(d_star < easy_cut, d_star, np.inf), cfg.bellman_eval_pairs, cfg.eval_seed)
    far = sample_pairs(d_star, cfg.bellman_eval_pairs, cfg.eval_seed, min_distance=easy_cut)
    steps = max_steps(cfg, world)
    rows = []
    for k, sigma in enumerate([0.0] + list(cfg.noise_levels)):
        critic = exact if sigma == 0 else exact.corrupted(sigma, cfg.seed)
        err = bellman_error(critic, batch, cfg.gamma, goals)
        policy = GreedyPolicy(-critic.action_scores, cfg.policy_seed)
        e = np.mean([o.success for o in run_pairs(world, policy, easy, d_star, cfg.eval_seed, steps)])
        f = np.mean([o.success for o in run_pairs(world, policy, far, d_star, cfg.eval_seed, steps)])
        rows.append((k, float(sigma), err, float(e), float(f)))
    io.write_rows(out_dir(cfg) / BELLMAN, ["checkpoint", "sigma", "error", "easy_success", "distant_success"], rows)
    return rows


def sample_transitions(trajs, size: int, seed: int) -> np.ndarray:
    """``(s, a, s_next, g_future)`` rows, future offset uniform over the remainder."""
    rng = np.random.default_rng([seed, 0xBE11])
    flat = [(i, t) for i, tr in enumerate(trajs) for t in range(len(tr))]
    if not flat:
        return np.empty((0, 4), dtype=np.int64)
    pick = rng.integers(len(flat), size=size)
    rows = []
    for p in pick:
        i, t = flat[p]
        tr = trajs[i]
        k = int(rng.integers(t + 1, len(tr.states)))
        rows.append((tr.states[t], tr.actions[t], tr.states[t + 1], tr.states[k]))
    return np.array(rows, dtype=np.int64)


def report(run_dirs, output_dir) -> list[tuple]:
    """Merge ``summary.json`` files from several runs into report and scatter CSVs."""
    rows, scatter = [], []
    for rd in run_dirs:
        summary = json.loads((Path(rd) / SUMMARY).read_text(encoding="utf-8"))
        rep = HorizonReport(
            [tuple(x) for x in summary["eta_per_doubling"]],
            _num(summary["eta_aggregate"]),
            _num(summary["reach_wc"]),
            _num(summary.get("invariance_ratio")),
        )
        rows.extend(_report_rows(summary["method"], rep))
        scatter.extend(scatter_report([(summary["method"], rep)]))
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_rows(out / REPORT, ["method", "c", "eta_c", "eta_aggregate", "reach_wc", "invariance_ratio"], rows)
    io.write_rows(out / SCATTER, ["method", "eta_aggregate", "invariance_ratio"], scatter)
    return scatter


def _num(x) -> float:
    if x is None:
        return math.nan
    if x == "inf":
        return math.inf
    return float(x)


def plot_data(run_dirs) -> str:
    """Whitespace columns ``bin_upper success_rate``, one gnuplot index per run."""
    blocks = []
    for rd in run_dirs:
        rows = io.read_rows(Path(rd) / CURVE)
        summary_path = Path(rd) / SUMMARY
        name = json.loads(summary_path.read_text())["method"] if summary_path.exists() else str(rd)
        lines = [f"# {name}", "# bin_upper success_rate n_pairs"]
        lines += [f"{r['bin_upper']} {r['success_rate']} {r['n_pairs']}" for r in rows]
        blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + "\n"
