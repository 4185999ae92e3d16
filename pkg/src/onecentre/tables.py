"""Result tables for convergence studies, with CSV export and limit extrapolation.

Every sweep in this package reports its cells through a :class:`ConvergenceTable`
so that CSV output is deterministic (fixed column order, round-trip float
formatting) and limit verdicts are produced by one shared rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence


def format_value(v) -> str:
    """Round-trip decimal formatting: repr for floats, str otherwise."""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


@dataclass
class ConvergenceTable:
    """A grid of schedule cells mapped to scalar observables.

    columns: ordered column names (first columns are schedule parameters).
    rows: one tuple per cell, in schedule order (never completion order).
    meta: free-form metadata (schedule description, tolerances, verdicts).
    """

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([format_value(v) for v in row])


def aitken_limit(values: Sequence[float]) -> float:
    """Aitken delta-squared extrapolant from the last three values.

    Exact for sequences x_k = L + C*q^k (any fixed ratio q != 1, including
    |q| > 1, where it recovers the repelling fixed point).
    """
    if len(values) < 3:
        raise ValueError("need at least three values")
    x0, x1, x2 = values[-3], values[-2], values[-1]
    d1 = x1 - x0
    d2 = x2 - x1
    denom = d2 - d1
    if denom == 0.0:
        return x2
    return x2 - d2 * d2 / denom


def richardson_limit(step_ratio: float, values: Sequence[float]) -> float:
    """Classic Richardson table assuming error = sum of C_m * h^m, h shrinking
    by `step_ratio` between consecutive values."""
    level = list(values)
    n = len(level)
    if n == 1:
        return level[0]
    for m in range(1, n):
        nxt = []
        mult = step_ratio ** m
        for i in range(n - m):
            nxt.append((mult * level[i + 1] - level[i]) / (mult - 1.0))
        level = nxt
    return level[0]


@dataclass(frozen=True)
class LimitVerdict:
    estimate: float
    converged: bool
    target: float | None
    last_increment: float
    note: str = ""


def limit_verdict(values: Sequence[float], target: float | None = None,
                  slack: float = 10.0) -> LimitVerdict:
    """Certify a finite schedule as evidence for a limit.

    The extrapolant comes from Aitken on the last three points.  When a target
    is given, "converged" requires the extrapolant to lie within
    slack * |last increment| of the target; with no target it requires the
    increments themselves to be shrinking.
    """
    vals = [float(v) for v in values]
    if len(vals) < 3:
        raise ValueError("need at least three schedule points")
    est = aitken_limit(vals)
    inc = abs(vals[-1] - vals[-2])
    if target is not None:
        ok = abs(est - target) <= slack * max(inc, 1e-300)
        return LimitVerdict(est, ok, target, inc)
    prev = abs(vals[-2] - vals[-3])
    ok = inc < prev or inc == 0.0
    return LimitVerdict(est, ok, None, inc)


def is_decreasing(values: Iterable[float], slack: float = 0.0) -> bool:
    vals = list(values)
    return all(b <= a + slack for a, b in zip(vals, vals[1:]))
