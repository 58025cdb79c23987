"""Recorded per-configuration measurements and the backends that replay them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .catalog import CloudConfiguration, ConfigurationSpace
from .cost import Mode, Observation, PiMeasurement, config_cost, pi_charge, pi_runtime_estimate
from .exceptions import (
    DuplicateKeyError,
    ModeUnavailableError,
    ParseError,
    UnknownKeyError,
    ValidationError,
)

TRACE_HEADER = (
    "workload",
    "class",
    "vm_name",
    "n",
    "pi_times_s",
    "total_iterations",
    "total_runtime_s",
    "feasible",
)
DEFAULT_FAILURE_DETECT_S = 120.0

_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}


def workload_id(kernel: str, input_class: str = "") -> str:
    return f"{kernel}/{input_class}" if input_class else kernel


@dataclass(frozen=True)
class TraceRow:
    workload: str
    input_class: str
    vm_name: str
    n: int
    pi_times_s: tuple[float, ...]
    total_iterations: int | None
    total_runtime_s: float | None
    feasible: bool

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"instance count must be >= 1, got {self.n}")
        if self.feasible:
            # constructing the measurement enforces the PI invariants
            self.pi_measurement()
            if self.total_runtime_s is not None and not self.total_runtime_s > 0:
                raise ValidationError(f"total_runtime_s must be > 0, got {self.total_runtime_s}")

    @property
    def workload_id(self) -> str:
        return workload_id(self.workload, self.input_class)

    @property
    def key(self) -> tuple[str, str, int]:
        return self.workload_id, self.vm_name, self.n

    def pi_measurement(self) -> PiMeasurement:
        if self.total_iterations is None:
            raise ValidationError("feasible trace rows need total_iterations")
        return PiMeasurement(self.pi_times_s, self.total_iterations)

    def to_csv_fields(self) -> list[str]:
        return [
            self.workload,
            self.input_class,
            self.vm_name,
            str(self.n),
            ";".join(repr(t) for t in self.pi_times_s),
            "" if self.total_iterations is None else str(self.total_iterations),
            "" if self.total_runtime_s is None else repr(self.total_runtime_s),
            "true" if self.feasible else "false",
        ]


class Trace(Mapping):
    """Trace rows indexed by ``(workload_id, vm_name, n)``."""

    def __init__(self, rows: Iterable[TraceRow]):
        self._rows: dict[tuple[str, str, int], TraceRow] = {}
        for row in rows:
            if row.key in self._rows:
                raise DuplicateKeyError(f"duplicate trace row for {row.key}")
            self._rows[row.key] = row

    def __getitem__(self, key):
        try:
            return self._rows[key]
        except KeyError:
            raise UnknownKeyError(f"no trace row for workload {key[0]!r}, vm {key[1]!r}, n={key[2]}") from None

    def __iter__(self):
        return iter(self._rows)

    def __len__(self):
        return len(self._rows)

    @property
    def workloads(self) -> list[str]:
        return sorted({key[0] for key in self._rows})

    def rows(self) -> list[TraceRow]:
        return list(self._rows.values())

    def lookup(self, workload: str, vm_name: str, n: int) -> TraceRow:
        return self[(workload, vm_name, int(n))]

    def unknown_vms(self, space: ConfigurationSpace) -> list[str]:
        known = {vm.name for vm in space.vms}
        return sorted({key[1] for key in self._rows} - known)


def _parse_row(fields: list[str], lineno: int) -> TraceRow:
    if len(fields) != len(TRACE_HEADER):
        raise ParseError(f"expected {len(TRACE_HEADER)} fields, got {len(fields)}", lineno)
    kernel, input_class, vm_name, n, pi_times, total_iters, total_runtime, feasible = fields
    try:
        flag = feasible.lower()
        if flag not in _TRUE | _FALSE:
            raise ValueError(f"feasible must be true or false, got {feasible!r}")
        times = tuple(float(t) for t in pi_times.split(";") if t.strip()) if pi_times else ()
        return TraceRow(
            workload=kernel,
            input_class=input_class,
            vm_name=vm_name,
            n=int(n),
            pi_times_s=times,
            total_iterations=int(total_iters) if total_iters else None,
            total_runtime_s=float(total_runtime) if total_runtime else None,
            feasible=flag in _TRUE,
        )
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from exc


def load_trace(source: str) -> Trace:
    """Parse trace CSV text. Unknown VM names are accepted here and fail at lookup."""
    rows = []
    seen: dict[tuple, int] = {}
    header_seen = False
    for lineno, line in enumerate(io.StringIO(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([stripped]))]
        if not header_seen:
            if tuple(fields) != TRACE_HEADER:
                raise ParseError(f"expected header {','.join(TRACE_HEADER)!r}", lineno)
            header_seen = True
            continue
        row = _parse_row(fields, lineno)
        if row.key in seen:
            raise DuplicateKeyError(f"line {lineno}: duplicate trace row {row.key} (first on line {seen[row.key]})")
        seen[row.key] = lineno
        rows.append(row)
    if not header_seen:
        raise ParseError("trace file has no header", None)
    return Trace(rows)


def read_trace(path: str | Path) -> Trace:
    return load_trace(Path(path).read_text(encoding="utf-8"))


def format_trace(rows: Iterable[TraceRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for row in rows:
        writer.writerow(row.to_csv_fields())
    return buf.getvalue()


class ObservationBackend:
    """Answers ``observe(config, mode)`` for configurations of ``space``.

    Subclasses implement ``_observe``; answers must not change between calls.
    Infeasible configurations are charged ``failure_detect_s`` seconds of
    cluster time.
    """

    space: ConfigurationSpace
    failure_detect_s: float = DEFAULT_FAILURE_DETECT_S

    def observe(self, config: CloudConfiguration, mode: Mode | str = Mode.FULL) -> Observation:
        mode = Mode(mode)
        self.space.coordinates(config)
        return self._observe(config, mode)

    def _observe(self, config: CloudConfiguration, mode: Mode) -> Observation:
        raise NotImplementedError

    def _infeasible(self, config: CloudConfiguration, mode: Mode) -> Observation:
        vm = self.space.vm(config)
        charge = config_cost(self.failure_detect_s, vm.price_usd_hour, config.n)
        return Observation(config, math.nan, charge, math.nan, False, mode)

    def objective_costs(self, mode: Mode | str = Mode.FULL) -> np.ndarray:
        """Objective cost of every configuration in enumeration order; NaN if infeasible."""
        out = np.full(len(self.space), np.nan)
        for k, config in enumerate(self.space):
            obs = self.observe(config, mode)
            if obs.feasible:
                out[k] = obs.objective_cost_usd
        return out

    def optimum(self, mode: Mode | str = Mode.FULL) -> tuple[CloudConfiguration, float]:
        """Cheapest feasible configuration by exhaustive scan."""
        costs = self.objective_costs(mode)
        if np.all(np.isnan(costs)):
            raise UnknownKeyError("backend has no feasible configuration")
        k = int(np.nanargmin(costs))
        return self.space.config_at(k), float(costs[k])


class TraceBackend(ObservationBackend):
    """Replays one workload of a trace over a configuration space."""

    def __init__(self, trace: Trace, space: ConfigurationSpace, workload: str | None = None,
                 failure_detect_s: float = DEFAULT_FAILURE_DETECT_S):
        if workload is None:
            if len(trace.workloads) != 1:
                raise ValidationError(f"trace holds workloads {trace.workloads}; pick one")
            workload = trace.workloads[0]
        if workload not in trace.workloads:
            raise UnknownKeyError(f"workload {workload!r} not in trace (have {trace.workloads})")
        if failure_detect_s < 0:
            raise ValidationError("failure_detect_s must be >= 0")
        self.trace = trace
        self.space = space
        self.workload = workload
        self.failure_detect_s = float(failure_detect_s)

    def _observe(self, config, mode):
        vm = self.space.vm(config)
        row = self.trace.lookup(self.workload, vm.name, config.n)
        if not row.feasible:
            return self._infeasible(config, mode)
        if mode is Mode.FULL:
            if row.total_runtime_s is None:
                raise ModeUnavailableError(
                    f"full-run observation of {vm.name}:{config.n} needs total_runtime_s in the trace"
                )
            runtime = row.total_runtime_s
            cost = config_cost(runtime, vm.price_usd_hour, config.n)
            return Observation(config, runtime, cost, cost, True, mode)
        pi = row.pi_measurement()
        runtime = pi_runtime_estimate(pi)
        objective = config_cost(runtime, vm.price_usd_hour, config.n)
        charge = pi_charge(pi, vm.price_usd_hour, config.n)
        return Observation(config, runtime, charge, objective, True, mode)


def observe(backend: ObservationBackend, config: CloudConfiguration, mode: Mode | str = Mode.FULL) -> Observation:
    return backend.observe(config, mode)
