"""Repeated seeded searches aggregated the way the experiments report them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cost import Mode
from .exceptions import ModeUnavailableError, ValidationError
from .pareto import front_metrics, observed_points, recommend
from .search import Budget, SearchPolicy, run_search
from .trace import ObservationBackend

SCHEMA_VERSION = 1
CSV_COLUMNS = ("step", "strategy", "geomean_best", "geomean_charge_full", "geomean_charge_pi")


def geometric_mean(values) -> float:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValidationError("geometric mean of no values")
    if np.any(~(values > 0)):
        raise ValidationError("geometric mean needs strictly positive values")
    return float(math.exp(math.fsum(np.log(values)) / values.size))


def _curve_geomean(curves: np.ndarray) -> list[float | None]:
    """Per-step geometric mean across repetitions; None where any value is not positive and finite."""
    out = []
    for column in curves.T:
        if np.all(column > 0) and np.all(np.isfinite(column)):
            out.append(geometric_mean(column))
        else:
            out.append(None)
    return out


@dataclass(frozen=True)
class Strategy:
    label: str
    policy: SearchPolicy


@dataclass
class ExperimentSpec:
    strategies: list[Strategy]
    budget: Budget = field(default_factory=Budget)
    repetitions: int = 50
    base_seed: int = 0

    def __post_init__(self):
        if not self.strategies:
            raise ValidationError("an experiment needs at least one strategy")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        labels = [s.label for s in self.strategies]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"strategy labels must be unique, got {labels}")

    @classmethod
    def from_policies(cls, policies: Sequence[SearchPolicy], **kwargs) -> "ExperimentSpec":
        labels, strategies = {}, []
        for policy in policies:
            labels[policy.name] = labels.get(policy.name, 0) + 1
            label = policy.name if labels[policy.name] == 1 else f"{policy.name}#{labels[policy.name]}"
            strategies.append(Strategy(label, policy))
        return cls(strategies, **kwargs)

    @property
    def seeds(self) -> range:
        return range(self.base_seed, self.base_seed + self.repetitions)


@dataclass
class StrategyReport:
    label: str
    policy: SearchPolicy
    best_curve: list[float | None]
    charge_full_curve: list[float | None]
    charge_pi_curve: list[float | None]
    final_best: list[float]
    final_charge_full: list[float | None]
    final_charge_pi: list[float | None]
    histories: list = field(repr=False, default_factory=list)

    @property
    def geomean_final_best(self) -> float:
        return geometric_mean(self.final_best)

    def pareto(self) -> dict:
        points = observed_points(self.histories)
        metrics = front_metrics(points)
        metrics["recommendations"] = recommend(self.histories)
        metrics["points"] = points
        return metrics


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    strategies: dict[str, StrategyReport]
    optimum_usd: float | None = None

    def __getitem__(self, label) -> StrategyReport:
        return self.strategies[label]


def _charges(backend, history, mode):
    try:
        return [backend.observe(obs.config, mode).charged_cost_usd for obs in history]
    except ModeUnavailableError:
        return None


def _cumulative(charge_lists, steps):
    if any(c is None for c in charge_lists):
        return None
    return np.array([np.cumsum(c)[:steps] for c in charge_lists])


def run_experiment(spec: ExperimentSpec, backend: ObservationBackend) -> ExperimentReport:
    """Run every strategy once per seed and aggregate by geometric mean.

    Seeds ``base_seed .. base_seed + repetitions - 1`` are shared by all
    strategies, so random initial designs are paired. Both charge curves are
    computed for the trajectory actually searched: the full-run charge and
    the early-stopped (PI) charge of the same configurations.
    """
    try:
        optimum = backend.optimum(Mode.FULL)[1]
    except ModeUnavailableError:
        optimum = backend.optimum(Mode.PI)[1]

    reports = {}
    for strategy in spec.strategies:
        results = [run_search(strategy.policy, backend, spec.budget, seed) for seed in spec.seeds]
        steps = len(results[0].best_curve)
        best = np.array([r.best_curve for r in results])
        full = _cumulative([_charges(backend, r.history, Mode.FULL) for r in results], steps)
        pi = _cumulative([_charges(backend, r.history, Mode.PI) for r in results], steps)
        reports[strategy.label] = StrategyReport(
            label=strategy.label,
            policy=strategy.policy,
            best_curve=_curve_geomean(best),
            charge_full_curve=[None] * steps if full is None else _curve_geomean(full),
            charge_pi_curve=[None] * steps if pi is None else _curve_geomean(pi),
            final_best=[float(v) for v in best[:, -1]],
            final_charge_full=[None] * len(results) if full is None else [float(v) for v in full[:, -1]],
            final_charge_pi=[None] * len(results) if pi is None else [float(v) for v in pi[:, -1]],
            histories=[r.history for r in results],
        )
    return ExperimentReport(spec, reports, optimum)


def normalize_to_random(report: ExperimentReport, baseline: str = "random") -> dict[str, dict]:
    """Best-cost curves divided by the random baseline's at each step.

    ``improvement_factor`` is the baseline's geometric-mean final best over
    the strategy's, so a strategy ending at half the random cost scores 2.
    """
    if baseline not in report.strategies:
        raise ValidationError(f"report has no {baseline!r} strategy to normalize by")
    base = report.strategies[baseline]
    out = {}
    for label, strat in report.strategies.items():
        curve = [None if a is None or b is None else a / b for a, b in zip(strat.best_curve, base.best_curve)]
        out[label] = {
            "normalized_best_curve": curve,
            "improvement_factor": base.geomean_final_best / strat.geomean_final_best,
        }
    return out


def gap_to_optimum(report: ExperimentReport, optimum: float | None = None) -> dict[str, float]:
    """Relative excess of each strategy's geometric-mean final best over the space optimum."""
    optimum = report.optimum_usd if optimum is None else optimum
    if optimum is None or not optimum > 0:
        raise ValidationError("a positive space optimum is required")
    return {label: (s.geomean_final_best - optimum) / optimum for label, s in report.strategies.items()}


def _point_dict(space, p):
    return {"config": space.label(p.config), "runtime_s": p.runtime_s, "cost_usd": p.cost_usd,
            "frequency": p.selection_frequency}


def report_to_dict(report: ExperimentReport, space) -> dict:
    spec = report.spec
    has_random = "random" in report.strategies
    normalized = normalize_to_random(report) if has_random else {}
    gaps = gap_to_optimum(report) if report.optimum_usd else {}
    strategies = {}
    for label, s in report.strategies.items():
        pareto = s.pareto()
        opt = report.optimum_usd
        strategies[label] = {
            "policy": s.policy.to_dict(),
            "geomean_best_curve": s.best_curve,
            "geomean_charge_full_curve": s.charge_full_curve,
            "geomean_charge_pi_curve": s.charge_pi_curve,
            "optimum_normalized_best_curve": [None if v is None else v / opt for v in s.best_curve] if opt else None,
            "final_best": s.final_best,
            "geomean_final_best": s.geomean_final_best,
            "final_charge_full": s.final_charge_full,
            "final_charge_pi": s.final_charge_pi,
            "ratio_to_random": normalized.get(label),
            "gap_to_optimum": gaps.get(label),
            "pareto": {
                "count": pareto["count"],
                "area": pareto["area"],
                "recommendations": [_point_dict(space, p) for p in pareto["recommendations"]],
            },
            "observed": [_point_dict(space, p) for p in pareto["points"]],
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "bench_report",
        "repetitions": spec.repetitions,
        "base_seed": spec.base_seed,
        "budget": {"max_observations": spec.budget.max_observations, "init_random": spec.budget.init_random,
                   "mode": spec.budget.mode.value},
        "optimum_usd": report.optimum_usd,
        "strategies": strategies,
    }


def export_csv(report_dict: dict) -> str:
    """Flatten the per-step curves of a report dict into CSV rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for label, s in report_dict["strategies"].items():
        curves = zip(s["geomean_best_curve"], s["geomean_charge_full_curve"], s["geomean_charge_pi_curve"])
        for step, values in enumerate(curves, start=1):
            writer.writerow([step, label, *("" if v is None else repr(v) for v in values)])
    return buf.getvalue()
