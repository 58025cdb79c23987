"""Configuration cost, paramount-iteration (PI) extrapolation and charge accounting."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .catalog import CloudConfiguration
from .exceptions import ParseError, UnknownKeyError, ValidationError

SECONDS_PER_HOUR = 3600.0

# Share of the full execution time spent in the first four paramount
# iterations of each NPB kernel. EP is reported only as "below 1%".
DEFAULT_PI_FRACTIONS = {
    "cg": 0.0443,
    "ft": 0.1733,
    "mg": 0.12,
    "is": 0.40,
    "ep": 0.01,
}


class Mode(str, Enum):
    FULL = "full"
    PI = "pi"


def config_cost(runtime_s: float, price_usd_hour: float, n: int) -> float:
    """USD charged for running ``n`` instances at ``price_usd_hour`` for ``runtime_s`` seconds."""
    if not runtime_s >= 0:
        raise ValidationError(f"runtime must be >= 0, got {runtime_s}")
    if not price_usd_hour > 0:
        raise ValidationError(f"price must be > 0, got {price_usd_hour}")
    if n < 1:
        raise ValidationError(f"instance count must be >= 1, got {n}")
    return runtime_s / SECONDS_PER_HOUR * price_usd_hour * n


@dataclass(frozen=True)
class PiMeasurement:
    """Wall times of the first paramount iterations of a run.

    ``total_iterations`` is how many paramount iterations the full run executes.
    """

    iteration_times_s: tuple[float, ...]
    total_iterations: int

    def __post_init__(self):
        times = tuple(float(t) for t in self.iteration_times_s)
        object.__setattr__(self, "iteration_times_s", times)
        if not times:
            raise ValidationError("PI measurement needs at least one iteration time")
        if any(not (t > 0 and math.isfinite(t)) for t in times):
            raise ValidationError(f"PI iteration times must be finite and > 0, got {list(times)}")
        if self.total_iterations < len(times):
            raise ValidationError(
                f"total_iterations ({self.total_iterations}) is smaller than the "
                f"number of measured iterations ({len(times)})"
            )


def pi_runtime_estimate(pi: PiMeasurement) -> float:
    """Extrapolate the full runtime linearly: mean iteration time times total iterations."""
    times = pi.iteration_times_s
    return math.fsum(times) / len(times) * pi.total_iterations


def pi_charge(pi: PiMeasurement, price_usd_hour: float, n: int) -> float:
    """USD spent running only the measured iterations before stopping."""
    return config_cost(math.fsum(pi.iteration_times_s), price_usd_hour, n)


def pi_fraction(workload: str, table: Mapping[str, float] | None = None) -> float:
    """Fraction of full execution time consumed by the measured PIs of ``workload``.

    ``workload`` may carry an input class suffix (``"cg/D"``); the lookup
    tries the full id first, then the kernel name.
    """
    table = DEFAULT_PI_FRACTIONS if table is None else table
    key = workload.lower()
    for candidate in (key, key.split("/")[0]):
        if candidate in table:
            return table[candidate]
    raise UnknownKeyError(f"no PI fraction for workload {workload!r}")


def load_pi_fractions(source: str) -> dict[str, float]:
    """Parse a ``workload,fraction`` CSV override table."""
    table = {}
    header_seen = False
    for lineno, line in enumerate(io.StringIO(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([stripped]))]
        if not header_seen:
            if fields != ["workload", "fraction"]:
                raise ParseError(f"expected header 'workload,fraction', got {stripped!r}", lineno)
            header_seen = True
            continue
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", lineno)
        try:
            value = float(fields[1])
        except ValueError as exc:
            raise ParseError(f"bad fraction {fields[1]!r}", lineno) from exc
        if not 0 < value <= 1:
            raise ParseError(f"fraction must be in (0, 1], got {value}", lineno)
        table[fields[0].lower()] = value
    return table


@dataclass(frozen=True)
class Observation:
    """One evaluated configuration.

    ``charged_cost_usd`` is what making the observation cost; ``objective_cost_usd``
    is the full-run cost being minimized (NaN when infeasible).
    """

    config: CloudConfiguration
    runtime_estimate_s: float
    charged_cost_usd: float
    objective_cost_usd: float
    feasible: bool
    mode: Mode

    def __post_init__(self):
        if not self.charged_cost_usd >= 0:
            raise ValidationError(f"charged cost must be >= 0, got {self.charged_cost_usd}")
        if self.feasible:
            if not (self.runtime_estimate_s > 0 and self.objective_cost_usd > 0):
                raise ValidationError("feasible observations need positive runtime and objective cost")
            if self.mode is Mode.PI and self.charged_cost_usd > self.objective_cost_usd * (1 + 1e-12):
                raise ValidationError("an early-stopped observation cannot cost more than the full run")

    def to_dict(self, label: str | None = None) -> dict:
        out = {
            "vm_index": self.config.vm_index,
            "n": self.config.n,
            "runtime_estimate_s": self.runtime_estimate_s if self.feasible else None,
            "charged_cost_usd": self.charged_cost_usd,
            "objective_cost_usd": self.objective_cost_usd if self.feasible else None,
            "feasible": self.feasible,
            "mode": self.mode.value,
        }
        if label is not None:
            out = {"config": label, **out}
        return out

