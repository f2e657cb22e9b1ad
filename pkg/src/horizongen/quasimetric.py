"""Path relaxation and quasimetric certification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import validate_distance_table

TRIANGLE_EPS = 1e-9


@dataclass
class QuasimetricTable:
    """A distance table plus a flag that only :func:`audit_quasimetric` sets."""

    values: np.ndarray
    certified: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]


def path_relaxation_closure(d) -> QuasimetricTable:
    """Min-plus closure: ``d(s, g) <- min_w d(s, w) + d(w, g)`` to a fixed point.

    One Floyd-Warshall sweep over intermediate states reaches the fixed point,
    which is the largest quasimetric lying pointwise below ``d``. Unreachable
    pairs (``inf``) stay ``inf`` unless a finite path exists.
    """
    if isinstance(d, QuasimetricTable):
        d = d.values
    out = validate_distance_table(d).copy()
    for w in range(out.shape[0]):
        np.minimum(out, out[:, w, None] + out[None, w, :], out=out)
    return QuasimetricTable(out)


def relax_once(d: np.ndarray) -> np.ndarray:
    """One synchronous application of the path relaxation operator."""
    d = np.asarray(d, dtype=float)
    return np.min(d[:, :, None] + d[None, :, :], axis=1)


def _is_integral(d: np.ndarray) -> bool:
    finite = d[np.isfinite(d)]
    return bool(np.all(finite == np.round(finite)))


def audit_quasimetric(d, eps: float | None = None) -> list[tuple[int, int, int]]:
    """Every triple ``(s, w, g)`` with ``d(s, g) > d(s, w) + d(w, g) + eps``.

    ``eps`` defaults to 0 for integer-valued tables and ``TRIANGLE_EPS``
    otherwise. Auditing a :class:`QuasimetricTable` with no violations marks
    it certified.
    """
    table = d if isinstance(d, QuasimetricTable) else None
    values = np.asarray(table.values if table is not None else d, dtype=float)
    if eps is None:
        eps = 0.0 if _is_integral(values) else TRIANGLE_EPS
    violations = []
    for w in range(values.shape[0]):
        via = values[:, w, None] + values[None, w, :]
        with np.errstate(invalid="ignore"):
            bad = values > via + eps
        for s, g in zip(*np.nonzero(bad)):
            violations.append((int(s), w, int(g)))
    violations.sort()
    if table is not None and not violations:
        table.certified = True
    return violations


def certify(d) -> QuasimetricTable:
    """Wrap ``d`` and audit it; raises if any triangle inequality fails."""
    table = d if isinstance(d, QuasimetricTable) else QuasimetricTable(validate_distance_table(d).copy())
    bad = audit_quasimetric(table)
    if bad:
        raise ValueError(f"{len(bad)} triangle violations, e.g. {bad[0]}")
    return table


def short_pair_restriction(d: np.ndarray, c: float) -> np.ndarray:
    """Keep only pairs with ``d(s, g) < c``; the rest become ``inf``."""
    if c <= 0:
        raise ValueError("threshold must be positive")
    d = np.asarray(d, dtype=float)
    out = np.where(d < c, d, np.inf)
    np.fill_diagonal(out, 0.0)
    return out
