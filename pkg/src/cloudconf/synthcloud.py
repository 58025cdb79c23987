"""Seeded synthetic cost spaces built from an Amdahl-style execution model."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .catalog import CloudConfiguration, ConfigurationSpace, VmType
from .cost import Mode, Observation, config_cost
from .exceptions import ParseError, ValidationError
from .trace import DEFAULT_FAILURE_DETECT_S, ObservationBackend, TraceRow

DEFAULT_PI_COUNT = 4


@dataclass(frozen=True)
class AmdahlModel:
    """Parameters of the synthetic runtime model.

    Runtime on ``n`` instances of a VM with ``v`` vCPUs and ``b`` Gbit/s is
    ``t1_s * (s + (1 - s) / (v * n)) + comm_coeff_s * (n - 1) / b``, scaled by
    lognormal noise ``exp(noise_sigma * z)``. Clusters with less than
    ``mem_req_gib`` of total memory cannot run the workload.
    """

    t1_s: float = 20000.0
    serial_fraction: float = 0.12
    comm_coeff_s: float = 200.0
    mem_req_gib: float = 32.0
    noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.t1_s > 0:
            raise ValidationError(f"t1_s must be > 0, got {self.t1_s}")
        if not 0 <= self.serial_fraction <= 1:
            raise ValidationError(f"serial_fraction must be in [0, 1], got {self.serial_fraction}")
        if not self.comm_coeff_s >= 0:
            raise ValidationError(f"comm_coeff_s must be >= 0, got {self.comm_coeff_s}")
        if not self.noise_sigma >= 0:
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not self.mem_req_gib >= 0:
            raise ValidationError(f"mem_req_gib must be >= 0, got {self.mem_req_gib}")

    def to_text(self) -> str:
        return "".join(f"{k}={v!r}\n" for k, v in asdict(self).items())


_FIELD_TYPES = {f.name: (int if f.name == "seed" else float) for f in fields(AmdahlModel)}


def load_model(source: str) -> AmdahlModel:
    """Parse an AmdahlModel from ``key=value`` lines or a one-row CSV with a header."""
    lines = [
        (lineno, line.strip())
        for lineno, line in enumerate(io.StringIO(source), start=1)
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines:
        raise ValidationError("model file is empty")
    values = {}
    if "=" in lines[0][1]:
        for lineno, line in lines:
            key, sep, value = line.partition("=")
            if not sep:
                raise ParseError(f"expected key=value, got {line!r}", lineno)
            values[key.strip()] = (lineno, value.strip())
    else:
        if len(lines) != 2:
            raise ParseError("CSV model file needs one header and one data row", lines[-1][0])
        header = [h.strip() for h in next(csv.reader([lines[0][1]]))]
        row = [v.strip() for v in next(csv.reader([lines[1][1]]))]
        if len(header) != len(row):
            raise ParseError("header and data row lengths differ", lines[1][0])
        values = {k: (lines[1][0], v) for k, v in zip(header, row)}

    kwargs = {}
    for key, (lineno, raw) in values.items():
        if key not in _FIELD_TYPES:
            raise ParseError(f"unknown model field {key!r}", lineno)
        try:
            kwargs[key] = _FIELD_TYPES[key](raw)
        except ValueError as exc:
            raise ParseError(f"bad value for {key}: {raw!r}", lineno) from exc
    return AmdahlModel(**kwargs)


def read_model(path: str | Path) -> AmdahlModel:
    return load_model(Path(path).read_text(encoding="utf-8"))


def synth_runtime(model: AmdahlModel, vm: VmType, n: int, rng: np.random.Generator | None = None) -> float | None:
    """Runtime in seconds of the synthetic workload, or None when memory is insufficient.

    With ``noise_sigma > 0`` one standard normal draw is taken from ``rng``
    (a generator seeded with ``model.seed`` when omitted), feasible or not,
    so the stream stays aligned with the grid.
    """
    if n < 1:
        raise ValidationError(f"instance count must be >= 1, got {n}")
    z = 0.0
    if model.noise_sigma > 0:
        if rng is None:
            rng = np.random.default_rng(model.seed)
        z = rng.standard_normal()
    if vm.mem_gib * n < model.mem_req_gib:
        return None
    s = model.serial_fraction
    runtime = model.t1_s * (s + (1.0 - s) / (vm.vcpus * n))
    runtime += model.comm_coeff_s * (n - 1) / vm.network_gbps
    return runtime * math.exp(model.noise_sigma * z)


@dataclass(frozen=True)
class SynthEntry:
    runtime_s: float
    feasible: bool


def synth_space(model: AmdahlModel, space: ConfigurationSpace) -> dict[CloudConfiguration, SynthEntry]:
    """Runtime and feasibility of every configuration, drawing noise in grid order."""
    rng = np.random.default_rng(model.seed)
    out = {}
    for config in space:
        runtime = synth_runtime(model, space.vm(config), config.n, rng)
        out[config] = SynthEntry(math.nan, False) if runtime is None else SynthEntry(runtime, True)
    return out


class SyntheticBackend(ObservationBackend):
    """Observation backend over a pre-drawn synthetic space.

    PI-mode observations estimate the runtime exactly and charge
    ``pi_fraction`` of the full-run cost.
    """

    def __init__(self, model: AmdahlModel, space: ConfigurationSpace, pi_fraction: float = 0.14,
                 failure_detect_s: float = DEFAULT_FAILURE_DETECT_S):
        if not 0 < pi_fraction <= 1:
            raise ValidationError(f"pi_fraction must be in (0, 1], got {pi_fraction}")
        if failure_detect_s < 0:
            raise ValidationError("failure_detect_s must be >= 0")
        self.model = model
        self.space = space
        self.pi_fraction = float(pi_fraction)
        self.failure_detect_s = float(failure_detect_s)
        self.entries = synth_space(model, space)

    def _observe(self, config, mode):
        entry = self.entries[config]
        if not entry.feasible:
            return self._infeasible(config, mode)
        vm = self.space.vm(config)
        cost = config_cost(entry.runtime_s, vm.price_usd_hour, config.n)
        charge = cost if mode is Mode.FULL else cost * self.pi_fraction
        return Observation(config, entry.runtime_s, charge, cost, True, mode)


def synth_trace_rows(model: AmdahlModel, space: ConfigurationSpace, workload: str = "synth",
                     input_class: str = "", pi_fraction: float = 0.14,
                     pi_count: int = DEFAULT_PI_COUNT) -> list[TraceRow]:
    """Trace rows for a synthetic space with uniform PI times.

    Each of the ``pi_count`` iterations takes ``pi_fraction / pi_count`` of the
    full runtime, so an early stop is charged ``pi_fraction`` of a full run.
    """
    if not 0 < pi_fraction <= 1:
        raise ValidationError(f"pi_fraction must be in (0, 1], got {pi_fraction}")
    total_iterations = max(pi_count, round(pi_count / pi_fraction))
    rows = []
    for config, entry in synth_space(model, space).items():
        vm = space.vm(config)
        if entry.feasible:
            step = entry.runtime_s * pi_fraction / pi_count
            rows.append(TraceRow(workload, input_class, vm.name, config.n, (step,) * pi_count,
                                 total_iterations, entry.runtime_s, True))
        else:
            rows.append(TraceRow(workload, input_class, vm.name, config.n, (), None, None, False))
    return rows


# Five valley-shaped spaces with distinct scaling profiles; memory demands
# stay small enough that most of the grid is feasible.
PRESET_MODELS = {
    "serial-bound": AmdahlModel(t1_s=25000.0, serial_fraction=0.15, comm_coeff_s=2500.0, mem_req_gib=0.0, seed=1),
    "short-run": AmdahlModel(t1_s=5000.0, serial_fraction=0.25, comm_coeff_s=1500.0, mem_req_gib=16.0, seed=2),
    "compute-bound": AmdahlModel(t1_s=20000.0, serial_fraction=0.12, comm_coeff_s=200.0, mem_req_gib=32.0, seed=3),
    "long-run": AmdahlModel(t1_s=60000.0, serial_fraction=0.2, comm_coeff_s=10000.0, mem_req_gib=16.0, seed=4),
    "network-bound": AmdahlModel(t1_s=12000.0, serial_fraction=0.03, comm_coeff_s=4000.0, mem_req_gib=8.0, seed=5),
}
