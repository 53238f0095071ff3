"""Non-dominated sorting, spread-preserving selection, and 2-D hypervolume.

All objectives are minimized.  Points carry an integer payload (trace
step index) used for deterministic tie-breaking and duplicate collapse.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

__all__ = [
    "ParetoError",
    "FrontPoint",
    "pareto_front",
    "select_k",
    "hypervolume_2d",
    "common_reference_point",
]


class ParetoError(ValueError):
    pass


@dataclass(frozen=True)
class FrontPoint:
    o1: float
    o2: float
    payload: int = 0

    def objectives(self) -> tuple[float, float]:
        return (self.o1, self.o2)


def _sort_key(p: FrontPoint):
    return (p.o1, p.o2, p.payload)


def pareto_front(points: list[FrontPoint]) -> list[FrontPoint]:
    """Exact non-dominated subset, duplicates collapsed to the lowest payload.

    Sweep over points sorted by (o1, o2, payload): a point survives iff its
    o2 is strictly below every earlier point's, which in 2-D is exactly
    non-dominance with duplicate collapse.
    """
    best_o2 = float("inf")
    front: list[FrontPoint] = []
    for p in sorted(points, key=_sort_key):
        if p.o2 < best_o2:
            front.append(p)
            best_o2 = p.o2
    return front


def _quantile_indices(n: int, k: int) -> list[int]:
    """k evenly spaced ranks over 0..n-1: round(i*(n-1)/(k-1)), deduplicated
    then backfilled left to right."""
    if k == 1:
        picked = [0]
    else:
        picked = []
        for i in range(k):
            idx = round(i * (n - 1) / (k - 1))
            if idx not in picked:
                picked.append(idx)
    for idx in range(n):
        if len(picked) >= k:
            break
        if idx not in picked:
            picked.append(idx)
    return sorted(picked[:k])


def select_k(points: list[FrontPoint], k: int) -> list[FrontPoint]:
    """Exactly k spread-out points: quantiles of the first front, peeling
    successive fronts when the first is too small."""
    if k < 1:
        raise ParetoError("k must be >= 1")
    if len(points) < k:
        raise ParetoError(f"need at least {k} points, got {len(points)}")
    pool = list(points)
    chosen: list[FrontPoint] = []
    while len(chosen) < k:
        front = pareto_front(pool)
        if not front:
            raise ParetoError(f"fewer than {k} selectable points")
        need = k - len(chosen)
        if len(front) <= need:
            chosen.extend(front)
        else:
            chosen.extend(front[i] for i in _quantile_indices(len(front), need))
        # peel: drop the whole front, duplicates of its members included
        taken = {(p.o1, p.o2) for p in front}
        pool = [p for p in pool if (p.o1, p.o2) not in taken]
    return chosen


def hypervolume_2d(front: list[FrontPoint], ref: tuple[float, float]) -> float:
    """Area of the union of [o1, r1] x [o2, r2] rectangles (sorted sweep).

    Points that do not strictly dominate the reference are dropped with a
    warning; the rest are non-dominated-filtered before the sweep.
    """
    r1, r2 = float(ref[0]), float(ref[1])
    kept = [p for p in front if p.o1 < r1 and p.o2 < r2]
    if len(kept) < len(front):
        warnings.warn(
            f"hypervolume_2d: dropped {len(front) - len(kept)} point(s) not "
            "dominating the reference",
            stacklevel=2,
        )
    area = 0.0
    prev_o2 = r2
    for p in pareto_front(kept):   # sorted by o1 ascending, o2 descending
        area += (r1 - p.o1) * (prev_o2 - p.o2)
        prev_o2 = p.o2
    return area


def common_reference_point(sets: list[list[FrontPoint]]) -> tuple[float, float]:
    """Componentwise max over the union, pushed out by x1.1 (or +0.1 when
    the max is <= 0, where scaling would pull it inward)."""
    union = [p for s in sets for p in s]
    if not union:
        raise ParetoError("need at least one non-empty point set")

    def push(m: float) -> float:
        return m * 1.1 if m > 0.0 else m + 0.1

    return (push(max(p.o1 for p in union)), push(max(p.o2 for p in union)))
