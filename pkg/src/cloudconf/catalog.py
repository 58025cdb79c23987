"""VM catalog, the (VM type, cluster size) grid and its axis ordering."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exceptions import DuplicateKeyError, OutOfBoundsError, ParseError, ValidationError

CATALOG_HEADER = ("name", "vcpus", "mem_gib", "network_gbps", "price_usd_hour")
DEFAULT_SIZES = (1, 2, 4, 8, 16, 32)


@dataclass(frozen=True)
class VmType:
    name: str
    vcpus: int
    mem_gib: float
    network_gbps: float
    price_usd_hour: float

    def __post_init__(self):
        if not self.name:
            raise ValidationError("VM name must be non-empty")
        if self.vcpus < 1:
            raise ValidationError(f"{self.name}: vcpus must be >= 1, got {self.vcpus}")
        for attr in ("mem_gib", "network_gbps", "price_usd_hour"):
            value = getattr(self, attr)
            if not np.isfinite(value) or value <= 0:
                raise ValidationError(f"{self.name}: {attr} must be > 0, got {value}")


@dataclass(frozen=True, order=True)
class CloudConfiguration:
    """A cluster of ``n`` instances of the VM at ``vm_index`` on the ordered axis."""

    vm_index: int
    n: int


def load_catalog(source: str) -> list[VmType]:
    """Parse catalog CSV text into VM types, preserving row order.

    Lines starting with ``#`` are ignored. Errors carry the 1-based line
    number of the offending row in ``source``.
    """
    rows = []
    header = None
    for lineno, line in enumerate(io.StringIO(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = next(csv.reader([stripped]))
        fields = [f.strip() for f in fields]
        if header is None:
            if tuple(fields) != CATALOG_HEADER:
                raise ParseError(f"expected header {','.join(CATALOG_HEADER)!r}, got {stripped!r}", lineno)
            header = fields
            continue
        if len(fields) != len(CATALOG_HEADER):
            raise ParseError(f"expected {len(CATALOG_HEADER)} fields, got {len(fields)}", lineno)
        name, vcpus, mem, net, price = fields
        try:
            vm = VmType(name, int(vcpus), float(mem), float(net), float(price))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
        rows.append((lineno, vm))

    if not rows:
        raise ValidationError("catalog contains no VM rows")
    seen = {}
    for lineno, vm in rows:
        if vm.name in seen:
            raise DuplicateKeyError(f"line {lineno}: duplicate VM name {vm.name!r} (first on line {seen[vm.name]})")
        seen[vm.name] = lineno
    return [vm for _, vm in rows]


def read_catalog(path: str | Path) -> list[VmType]:
    return load_catalog(Path(path).read_text(encoding="utf-8"))


def default_catalog() -> list[VmType]:
    """The 32 AWS VM types used in the NPB experiments, in file order."""
    text = resources.files("cloudconf").joinpath("data/aws_table2.csv").read_text(encoding="utf-8")
    return load_catalog(text)


def order_vm_axis(vms: Sequence[VmType]) -> list[VmType]:
    """Sort VMs by price, then memory, then name.

    Putting cheap low-memory machines at one end and expensive ones at the
    other tends to leave the cost-effective configurations in a valley,
    which makes the cost surface smoother for the surrogate.
    """
    if len(vms) == 0:
        raise ValidationError("cannot order an empty VM list")
    return sorted(vms, key=lambda vm: (vm.price_usd_hour, vm.mem_gib, vm.name))


def _check_sizes(sizes: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in sizes)
    if not sizes:
        raise ValidationError("size axis must be non-empty")
    if sizes[0] < 1:
        raise ValidationError(f"cluster sizes must be positive, got {sizes[0]}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValidationError(f"size axis must be strictly increasing, got {list(sizes)}")
    return sizes


@dataclass(frozen=True)
class ConfigurationSpace:
    """All (VM, n) pairs on a 2-D grid.

    Configurations are enumerated VM-major: index ``k = i * len(sizes) + j``.
    """

    vms: tuple[VmType, ...]
    sizes: tuple[int, ...] = DEFAULT_SIZES
    _size_pos: dict = field(init=False, repr=False, compare=False)
    _vm_pos: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.vms) == 0:
            raise ValidationError("configuration space needs at least one VM")
        object.__setattr__(self, "vms", tuple(self.vms))
        object.__setattr__(self, "sizes", _check_sizes(self.sizes))
        names = [vm.name for vm in self.vms]
        if len(set(names)) != len(names):
            raise DuplicateKeyError("VM names must be unique within a space")
        object.__setattr__(self, "_size_pos", {n: j for j, n in enumerate(self.sizes)})
        object.__setattr__(self, "_vm_pos", {name: i for i, name in enumerate(names)})

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.vms), len(self.sizes)

    def __len__(self) -> int:
        return len(self.vms) * len(self.sizes)

    def __iter__(self) -> Iterator[CloudConfiguration]:
        for i in range(len(self.vms)):
            for n in self.sizes:
                yield CloudConfiguration(i, n)

    def __contains__(self, config) -> bool:
        return (
            isinstance(config, CloudConfiguration)
            and 0 <= config.vm_index < len(self.vms)
            and config.n in self._size_pos
        )

    @property
    def configurations(self) -> list[CloudConfiguration]:
        return list(self)

    def coordinates(self, config: CloudConfiguration) -> tuple[int, int]:
        if config not in self:
            raise OutOfBoundsError(f"{config} is outside the {self.shape[0]}x{self.shape[1]} grid")
        return config.vm_index, self._size_pos[config.n]

    def index(self, config: CloudConfiguration) -> int:
        i, j = self.coordinates(config)
        return i * len(self.sizes) + j

    def config_at(self, index: int) -> CloudConfiguration:
        if not 0 <= index < len(self):
            raise OutOfBoundsError(f"flat index {index} outside [0, {len(self)})")
        i, j = divmod(index, len(self.sizes))
        return CloudConfiguration(i, self.sizes[j])

    def vm(self, config: CloudConfiguration) -> VmType:
        self.coordinates(config)
        return self.vms[config.vm_index]

    def vm_index(self, name: str) -> int:
        return self._vm_pos[name]

    def config_for(self, vm_name: str, n: int) -> CloudConfiguration:
        if vm_name not in self._vm_pos:
            raise OutOfBoundsError(f"VM {vm_name!r} is not on the VM axis")
        config = CloudConfiguration(self._vm_pos[vm_name], int(n))
        self.coordinates(config)
        return config

    def label(self, config: CloudConfiguration) -> str:
        return f"{self.vm(config).name}:{config.n}"

    def normalized_points(self) -> np.ndarray:
        """Normalized coordinates of every configuration, in enumeration order."""
        return np.array([normalize_coordinates(self, c) for c in self])


def enumerate_space(vms: Sequence[VmType], sizes: Iterable[int] = DEFAULT_SIZES) -> ConfigurationSpace:
    """Build the grid over an already ordered VM axis and a size axis."""
    return ConfigurationSpace(tuple(vms), tuple(sizes))


def normalize_coordinates(space: ConfigurationSpace, config: CloudConfiguration) -> tuple[float, float]:
    """Map grid coordinates (i, j) to the unit square; length-1 axes map to 0."""
    i, j = space.coordinates(config)
    n_vms, n_sizes = space.shape
    x = i / (n_vms - 1) if n_vms > 1 else 0.0
    y = j / (n_sizes - 1) if n_sizes > 1 else 0.0
    return x, y


def default_space(sizes: Iterable[int] = DEFAULT_SIZES) -> ConfigurationSpace:
    return enumerate_space(order_vm_axis(default_catalog()), sizes)
