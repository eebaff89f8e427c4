"""Data model and single-tick semantics of axons, neurons, cores and grids.

A core owns an ordered list of axons, an ordered list of neurons and a
binary crossbar connecting them.  Each axon carries a type index that
selects an entry of every neuron's weight table.  Neurons run either the
leaky integrate-and-fire datapath or the single-tick parity (XOR) path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

Coord = tuple[int, int]

WEIGHT_MIN = -256
WEIGHT_MAX = 255
MAX_DELAY = 15
DEFAULT_CAPACITY = (256, 256)


class ConfigError(ValueError):
    """A core, neuron or grid configuration is unusable."""


class CapacityError(ConfigError):
    """A structure does not fit the axon/neuron capacity of a core."""


class OpSelect(enum.Enum):
    LIF = "lif"
    XOR = "xor"


@dataclass(frozen=True)
class Destination:
    """Where a neuron's spike goes.

    ``core=None`` is the external host sink; ``axon`` is then ignored.
    """

    core: Optional[Coord]
    axon: int = 0
    delay: int = 1

    @property
    def is_host(self) -> bool:
        return self.core is None


HOST = None


@dataclass(frozen=True)
class AxonEntry:
    type_index: int
    label: str = ""


@dataclass(frozen=True)
class NeuronConfig:
    weights: tuple[int, ...]
    threshold: int = 1
    leak: int = 0
    reset_potential: int = 0
    op_select: OpSelect = OpSelect.LIF
    destination: Optional[Destination] = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))


@dataclass(eq=False)
class CoreConfig:
    axons: list[AxonEntry]
    neurons: list[NeuronConfig]
    crossbar: np.ndarray
    capacity: tuple[int, int] = DEFAULT_CAPACITY
    role: str = ""

    def __post_init__(self):
        self.crossbar = np.asarray(self.crossbar, dtype=bool)
        self.capacity = tuple(self.capacity)

    def __eq__(self, other):
        if not isinstance(other, CoreConfig):
            return NotImplemented
        return (self.axons == other.axons and self.neurons == other.neurons
                and self.capacity == other.capacity and self.role == other.role
                and self.crossbar.shape == other.crossbar.shape
                and np.array_equal(self.crossbar, other.crossbar))

    @property
    def n_axons(self) -> int:
        return len(self.axons)

    @property
    def n_neurons(self) -> int:
        return len(self.neurons)

    def weight_matrix(self) -> np.ndarray:
        """Effective signed synapse weights, shape (axons, neurons)."""
        n_types = max((len(n.weights) for n in self.neurons), default=0)
        max_type = max((a.type_index for a in self.axons), default=-1)
        if any(len(n.weights) <= max_type for n in self.neurons):
            raise ConfigError(f"axon type {max_type} has no weight in some neuron")
        table = np.zeros((len(self.neurons), max(n_types, 1)), dtype=np.int64)
        for j, n in enumerate(self.neurons):
            table[j, : len(n.weights)] = n.weights
        types = np.array([a.type_index for a in self.axons], dtype=np.int64)
        if len(types) == 0 or len(self.neurons) == 0:
            return np.zeros((len(self.axons), len(self.neurons)), dtype=np.int64)
        return np.where(self.crossbar, table[:, types].T, 0)

    def neuron_index(self, label: str) -> int:
        for j, n in enumerate(self.neurons):
            if n.label == label:
                return j
        raise KeyError(label)

    def axon_index(self, label: str) -> int:
        for i, a in enumerate(self.axons):
            if a.label == label:
                return i
        raise KeyError(label)


@dataclass
class GridConfig:
    width: int
    height: int
    cores: dict[Coord, CoreConfig] = field(default_factory=dict)

    def coords(self) -> list[Coord]:
        """Core coordinates in row-major order (y, then x)."""
        return sorted(self.cores, key=lambda c: (c[1], c[0]))


@dataclass(frozen=True)
class SpikeEvent:
    """A spike present on ``(core, axon)`` at ``tick``; ``core=None`` is the host."""

    tick: int
    core: Optional[Coord]
    axon: int = 0
    source: Optional[tuple[Coord, int]] = None


@dataclass(frozen=True)
class Violation:
    core: Optional[Coord]
    field: str
    message: str

    def __str__(self):
        where = "grid" if self.core is None else f"core {self.core}"
        return f"{where}: {self.field}: {self.message}"


def _core_violations(coord, core: CoreConfig) -> list[Violation]:
    out = []
    max_axons, max_neurons = core.capacity
    if core.crossbar.shape != (len(core.axons), len(core.neurons)):
        out.append(Violation(coord, "crossbar shape",
                             f"expected {(len(core.axons), len(core.neurons))}, "
                             f"got {core.crossbar.shape}"))
    if len(core.axons) > max_axons:
        out.append(Violation(coord, "axons", f"{len(core.axons)} > capacity {max_axons}"))
    if len(core.neurons) > max_neurons:
        out.append(Violation(coord, "neurons",
                             f"{len(core.neurons)} > capacity {max_neurons}"))
    for i, a in enumerate(core.axons):
        if a.type_index < 0:
            out.append(Violation(coord, f"axons[{i}].type_index", "negative"))
    max_type = max((a.type_index for a in core.axons), default=-1)
    for j, n in enumerate(core.neurons):
        if len(n.weights) <= max_type:
            out.append(Violation(coord, f"neurons[{j}].weights",
                                 f"{len(n.weights)} entries but axon type {max_type} used"))
        for w in n.weights:
            if not WEIGHT_MIN <= w <= WEIGHT_MAX:
                out.append(Violation(coord, f"neurons[{j}].weights",
                                     f"weight {w} outside [{WEIGHT_MIN}, {WEIGHT_MAX}]"))
        d = n.destination
        if d is not None and not 1 <= d.delay <= MAX_DELAY:
            out.append(Violation(coord, f"neurons[{j}].destination.delay",
                                 f"{d.delay} outside [1, {MAX_DELAY}]"))
    return out


def validate_grid(grid: GridConfig) -> list[Violation]:
    """Return every invariant violation in ``grid`` (empty list when valid)."""
    report: list[Violation] = []
    if grid.width <= 0 or grid.height <= 0:
        report.append(Violation(None, "size", f"{grid.width}x{grid.height}"))
    checked: dict[int, list[Violation]] = {}
    for coord in grid.coords():
        core = grid.cores[coord]
        x, y = coord
        if not (0 <= x < grid.width and 0 <= y < grid.height):
            report.append(Violation(coord, "coordinate", "outside grid bounds"))
        # shared config objects are checked once
        key = id(core)
        if key not in checked:
            checked[key] = _core_violations(coord, core)
        report.extend(Violation(coord, v.field, v.message) for v in checked[key])
        for j, n in enumerate(core.neurons):
            d = n.destination
            if d is None or d.is_host:
                continue
            target = grid.cores.get(tuple(d.core))
            if target is None:
                report.append(Violation(coord, f"neurons[{j}].destination",
                                        f"no core at {d.core}"))
            elif not 0 <= d.axon < len(target.axons):
                report.append(Violation(coord, f"neurons[{j}].destination",
                                        f"axon {d.axon} out of range at {d.core}"))
    return report


def neuron_step(n: NeuronConfig, connected_spiking_axon_types: Iterable[int],
                potential_in: int) -> tuple[bool, int]:
    """Advance one neuron by one tick.

    LIF: integrate the weights of the spiking axons, add the leak, spike and
    reset when the threshold is reached, otherwise keep the potential floored
    at zero.  XOR: spike on odd weighted input; no state is kept.
    """
    total = 0
    for t in connected_spiking_axon_types:
        if not 0 <= t < len(n.weights):
            raise ConfigError(f"axon type {t} has no weight in neuron {n.label!r}")
        total += n.weights[t]
    if n.op_select is OpSelect.XOR:
        return total % 2 == 1, 0
    v = potential_in + total + n.leak
    if v >= n.threshold:
        return True, n.reset_potential
    return False, max(v, 0)


def core_step(core: CoreConfig, axon_spikes, potentials_in) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate every neuron of ``core`` for one tick (vectorised ``neuron_step``)."""
    axon_spikes = np.asarray(axon_spikes, dtype=bool)
    potentials_in = np.asarray(potentials_in, dtype=np.int64)
    if axon_spikes.shape != (len(core.axons),):
        raise ValueError(f"axon vector has length {axon_spikes.shape}, core has "
                         f"{len(core.axons)} axons")
    if potentials_in.shape != (len(core.neurons),):
        raise ValueError(f"potential vector has length {potentials_in.shape}, core has "
                         f"{len(core.neurons)} neurons")
    if len(core.neurons) == 0:
        return np.zeros(0, dtype=bool), np.zeros(0, dtype=np.int64)
    w = core.weight_matrix()
    total = axon_spikes.astype(np.int64) @ w
    xor = np.array([n.op_select is OpSelect.XOR for n in core.neurons])
    leak = np.array([n.leak for n in core.neurons], dtype=np.int64)
    thr = np.array([n.threshold for n in core.neurons], dtype=np.int64)
    rst = np.array([n.reset_potential for n in core.neurons], dtype=np.int64)
    v = potentials_in + total + leak
    lif_spike = v >= thr
    spikes = np.where(xor, total % 2 == 1, lif_spike)
    out = np.where(lif_spike, rst, np.maximum(v, 0))
    out = np.where(xor, 0, out)
    return spikes, out
