"""CSV / JSON readers and writers for every artifact the CLI emits.

Floats are written with ``repr`` so CSV files round-trip bit-exactly;
infinity is spelled ``inf``.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .env import DatasetMeta, Trajectory
from .otdist import DiscreteDistribution, TransportPlan
from .quasimetric import QuasimetricTable


def fmt(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _writer(path):
    f = open(path, "w", newline="", encoding="utf-8")
    return f, csv.writer(f, lineterminator="\n")


def write_distance_csv(path, d: np.ndarray) -> None:
    d = np.asarray(d, dtype=float)
    f, w = _writer(path)
    with f:
        w.writerow(["s", "g", "value"])
        n = d.shape[0]
        for s in range(n):
            for g in range(n):
                w.writerow([s, g, fmt(d[s, g])])


def read_distance_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    n = int(math.isqrt(len(rows)))
    if n * n != len(rows):
        raise ValueError(f"{path}: expected n*n rows, got {len(rows)}")
    d = np.empty((n, n))
    for r in rows:
        d[int(r["s"]), int(r["g"])] = float(r["value"])
    return d


def write_distance_npy(path, d: np.ndarray) -> None:
    np.save(path, np.asarray(d, dtype=float))


def read_distance_npy(path) -> np.ndarray:
    return np.load(path)


def write_quasimetric(path, table: QuasimetricTable, extra: dict | None = None) -> Path:
    """CSV of the values plus a ``.json`` sidecar carrying the certified flag."""
    path = Path(path)
    write_distance_csv(path, table.values)
    side = path.with_suffix(".json")
    meta = {"certified": bool(table.certified), "n": table.n}
    meta.update(extra or {})
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return side


def read_quasimetric(path) -> QuasimetricTable:
    path = Path(path)
    values = read_distance_csv(path)
    side = path.with_suffix(".json")
    certified = False
    if side.exists():
        certified = bool(json.loads(side.read_text(encoding="utf-8")).get("certified", False))
    return QuasimetricTable(values, certified)


def write_dataset(csv_path, trajectories, meta: DatasetMeta) -> Path:
    f, w = _writer(csv_path)
    with f:
        w.writerow(["traj_id", "t", "s", "a", "s_next"])
        for i, tr in enumerate(trajectories):
            for t, a in enumerate(tr.actions):
                w.writerow([i, t, int(tr.states[t]), int(a), int(tr.states[t + 1])])
    side = Path(csv_path).with_suffix(".json")
    side.write_text(meta.to_json(), encoding="utf-8")
    return side


def read_dataset(csv_path) -> tuple[list[Trajectory], DatasetMeta | None]:
    by_traj: dict[int, list[tuple[int, int, int, int]]] = {}
    with open(csv_path, newline="", encoding="utf-8") as f:
        for r in csv.DictReader(f):
            by_traj.setdefault(int(r["traj_id"]), []).append(
                (int(r["t"]), int(r["s"]), int(r["a"]), int(r["s_next"]))
            )
    trajs = []
    for tid in sorted(by_traj):
        steps = sorted(by_traj[tid])
        states = [steps[0][1]] + [s_next for _, _, _, s_next in steps]
        actions = [a for _, _, a, _ in steps]
        trajs.append(Trajectory(np.array(states, dtype=np.int64), np.array(actions, dtype=np.int64)))
    side = Path(csv_path).with_suffix(".json")
    meta = DatasetMeta.from_json(side.read_text(encoding="utf-8")) if side.exists() else None
    return trajs, meta


def write_distribution_csv(path, dist: DiscreteDistribution) -> None:
    f, w = _writer(path)
    with f:
        w.writerow(["state_id", "prob"])
        for s, p in zip(dist.support, dist.probs):
            w.writerow([s, fmt(p)])


def read_distribution_csv(path) -> DiscreteDistribution:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    return DiscreteDistribution(tuple(int(r["state_id"]) for r in rows), tuple(float(r["prob"]) for r in rows))


def transport_json(value: float, plan: TransportPlan) -> str:
    body = {
        "value": value if math.isfinite(value) else "inf",
        "dual_gap": plan.dual_gap,
        "plan": [{"from": p, "to": q, "mass": m} for p, q, m in plan.nonzeros()],
    }
    return json.dumps(body, indent=2) + "\n"


def write_rows(path, header, rows) -> None:
    f, w = _writer(path)
    with f:
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, float) else x for x in row])


def read_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
