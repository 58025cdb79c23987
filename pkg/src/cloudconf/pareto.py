"""Pareto-optimal (runtime, cost) recommendations and front quality."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .catalog import CloudConfiguration
from .cost import Observation
from .exceptions import ValidationError


@dataclass(frozen=True)
class FrontPoint:
    config: CloudConfiguration
    runtime_s: float
    cost_usd: float
    selection_frequency: float = 1.0

    def __post_init__(self):
        if not (self.runtime_s > 0 and self.cost_usd > 0):
            raise ValidationError("front points need positive runtime and cost")
        if not 0 <= self.selection_frequency <= 1:
            raise ValidationError(f"selection frequency must be in [0, 1], got {self.selection_frequency}")


@dataclass(frozen=True)
class ParetoFront:
    """Non-dominated points sorted by runtime ascending (so cost strictly descending)."""

    points: tuple[FrontPoint, ...]

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def configs(self) -> list[CloudConfiguration]:
        return [p.config for p in self.points]


def dominates(a: FrontPoint, b: FrontPoint) -> bool:
    return (a.runtime_s <= b.runtime_s and a.cost_usd <= b.cost_usd
            and (a.runtime_s < b.runtime_s or a.cost_usd < b.cost_usd))


def pareto_front(points: Iterable[FrontPoint]) -> ParetoFront:
    """Non-dominated subset minimizing runtime and cost.

    Among points with identical (runtime, cost) only the one with the lowest
    grid coordinate is kept.
    """
    points = list(points)
    if not points:
        raise ValidationError("cannot build a Pareto front from no points")
    ordered = sorted(points, key=lambda p: (p.runtime_s, p.cost_usd, p.config))
    front = []
    best_cost = np.inf
    for p in ordered:
        if p.cost_usd < best_cost:
            front.append(p)
            best_cost = p.cost_usd
    return ParetoFront(tuple(front))


def normalize_objectives(points: Sequence[FrontPoint]) -> np.ndarray:
    """Rescale runtime and cost so the best value maps to 1 and the worst to 0.

    Returns an array of shape (len(points), 2) with columns (runtime, cost).
    An axis whose values are all equal maps to 1.
    """
    if len(points) == 0:
        raise ValidationError("nothing to normalize")
    raw = np.array([[p.runtime_s, p.cost_usd] for p in points], dtype=float)
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    span = hi - lo
    out = np.ones_like(raw)
    spread = span > 0
    out[:, spread] = (hi[spread] - raw[:, spread]) / span[spread]
    return out


def front_area(normalized) -> float:
    """Area of the unit square dominated by ``normalized`` points, reference (0, 0).

    Points are (runtime, cost) pairs where larger is better. The result is
    the union of the rectangles ``[0, x] x [0, y]``.
    """
    pts = np.asarray(normalized, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    # sweep x descending; each point adds the strip above the running max y
    pts = pts[np.lexsort((-pts[:, 1], -pts[:, 0]))]
    area = 0.0
    y_max = 0.0
    for x, y in pts:
        if y > y_max:
            area += x * (y - y_max)
            y_max = y
    return float(area)


def observed_points(runs: Sequence[Sequence[Observation]]) -> list[FrontPoint]:
    """Feasible configurations observed across runs, with the share of runs that observed each."""
    if len(runs) == 0:
        raise ValidationError("no runs given")
    counts: dict[CloudConfiguration, int] = {}
    first: dict[CloudConfiguration, Observation] = {}
    for history in runs:
        for config in {obs.config for obs in history if obs.feasible}:
            counts[config] = counts.get(config, 0) + 1
        for obs in history:
            if obs.feasible and obs.config not in first:
                first[obs.config] = obs
    return [
        FrontPoint(c, first[c].runtime_estimate_s, first[c].objective_cost_usd, counts[c] / len(runs))
        for c in sorted(first)
    ]


def recommend(runs: Sequence[Sequence[Observation]]) -> list[FrontPoint]:
    """Pareto-optimal observed configurations, cost-efficient end first."""
    points = observed_points(runs)
    if not points:
        raise ValidationError("recommendations need at least one feasible observation")
    return list(reversed(pareto_front(points).points))


def front_metrics(points: Sequence[FrontPoint]) -> dict:
    """Recommendation count and normalized front area for a set of observed points."""
    front = set(pareto_front(points).points)
    normalized = normalize_objectives(points)
    on_front = np.array([p in front for p in points])
    return {"count": int(on_front.sum()), "area": front_area(normalized[on_front])}
