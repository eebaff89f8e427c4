"""Tick engine: schedules, routing, per-tick evaluation and traces.

The grid is flattened once into global axon/neuron arrays; a tick kernel
(compiled when available, numpy otherwise) evaluates ranges of ticks.
``step_reference`` evaluates the same tick core by core through
:func:`neurogab.fabric.core_step` and exists to cross-check the kernel.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernel_py
from .fabric import (
    MAX_DELAY,
    ConfigError,
    Coord,
    GridConfig,
    OpSelect,
    SpikeEvent,
    core_step,
    validate_grid,
)

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

RING_SIZE = MAX_DELAY + 1


def kernel_name() -> str:
    """Name of the tick kernel selected at import ("cython" or "python")."""
    return "cython" if _select_kernel() is not _kernel_py else "python"


def _select_kernel(name: Optional[str] = None):
    name = name or os.environ.get("NEUROGAB_KERNEL", "auto")
    if name == "python":
        return _kernel_py
    if name in ("cython", "auto") and _kernel_c is not None:
        return _kernel_c
    if name == "cython":
        raise ImportError("compiled kernel neurogab._kernel is not built")
    return _kernel_py


class ScheduleError(ConfigError):
    """An input schedule targets something that is not in the grid."""


@dataclass
class InputSchedule:
    """Externally injected spikes, sorted by tick."""

    events: list[SpikeEvent] = field(default_factory=list)
    max_tick: int = 0

    def __post_init__(self):
        self.events = sorted(self.events, key=lambda e: e.tick)
        if self.events:
            self.max_tick = max(self.max_tick, self.events[-1].tick)


@dataclass(frozen=True)
class NeuronLocation:
    core: Coord
    index: int
    label: str = ""


class TraceLog:
    """Spikes per tick plus host-sink deliveries.

    Neuron identities are indices into ``locations``.
    """

    def __init__(self, locations: Sequence[NeuronLocation], spike_tick, spike_loc,
                 host_tick, host_loc, end_tick: int = 0):
        self.locations = list(locations)
        self.spike_tick = np.asarray(spike_tick, dtype=np.int64)
        self.spike_loc = np.asarray(spike_loc, dtype=np.int64)
        self.host_tick = np.asarray(host_tick, dtype=np.int64)
        self.host_loc = np.asarray(host_loc, dtype=np.int64)
        self.end_tick = end_tick

    @classmethod
    def empty(cls, locations=()):
        z = np.zeros(0, dtype=np.int64)
        return cls(locations, z, z, z, z, 0)

    @property
    def total_spike_count(self) -> int:
        return int(self.spike_tick.size)

    def spikes_at(self, tick: int) -> set[tuple[Coord, int]]:
        sel = self.spike_loc[self.spike_tick == tick]
        return {(self.locations[i].core, self.locations[i].index) for i in sel}

    def labels_at(self, tick: int, core: Coord) -> set[str]:
        sel = self.spike_loc[self.spike_tick == tick]
        return {self.locations[i].label for i in sel if self.locations[i].core == core}

    def spike_ticks_of(self, core: Coord, index: int) -> list[int]:
        ids = [i for i, loc in enumerate(self.locations)
               if loc.core == core and loc.index == index]
        return self.spike_tick[np.isin(self.spike_loc, ids)].tolist()

    def host_deliveries(self) -> list[tuple[int, NeuronLocation]]:
        return [(int(t), self.locations[i]) for t, i in zip(self.host_tick, self.host_loc)]

    def per_tick_counts(self) -> dict[int, int]:
        ticks, counts = np.unique(self.spike_tick, return_counts=True)
        return dict(zip(ticks.tolist(), counts.tolist()))

    def __eq__(self, other):
        if not isinstance(other, TraceLog):
            return NotImplemented
        return (self.locations == other.locations
                and self.end_tick == other.end_tick
                and np.array_equal(self.spike_tick, other.spike_tick)
                and np.array_equal(self.spike_loc, other.spike_loc)
                and np.array_equal(self.host_tick, other.host_tick)
                and np.array_equal(self.host_loc, other.host_loc))


class FlatGrid:
    """Global-array view of a grid used by the tick kernels."""

    def __init__(self, grid: GridConfig):
        self.grid = grid
        self.coords = grid.coords()
        self.axon_offset: dict[Coord, int] = {}
        self.neuron_offset: dict[Coord, int] = {}
        a_off = n_off = 0
        for c in self.coords:
            core = grid.cores[c]
            self.axon_offset[c] = a_off
            self.neuron_offset[c] = n_off
            a_off += len(core.axons)
            n_off += len(core.neurons)
        self.n_axons = a_off
        self.n_neurons = n_off

        thr, leak, rst, xor, dest, delay = [], [], [], [], [], []
        syn_a, syn_n, syn_w = [], [], []
        self.locations: list[NeuronLocation] = []
        cache: dict[int, tuple] = {}
        for c in self.coords:
            core = grid.cores[c]
            key = id(core)
            if key not in cache:
                w = core.weight_matrix()
                ai, nj = np.nonzero(core.crossbar)
                cache[key] = (
                    ai, nj, w[ai, nj],
                    [n.threshold for n in core.neurons],
                    [n.leak for n in core.neurons],
                    [n.reset_potential for n in core.neurons],
                    [n.op_select is OpSelect.XOR for n in core.neurons],
                )
            ai, nj, wv, t_, l_, r_, x_ = cache[key]
            syn_a.append(ai + self.axon_offset[c])
            syn_n.append(nj + self.neuron_offset[c])
            syn_w.append(wv)
            thr += t_
            leak += l_
            rst += r_
            xor += x_
            for j, n in enumerate(core.neurons):
                self.locations.append(NeuronLocation(c, j, n.label))
                d = n.destination
                if d is None:
                    dest.append(_kernel_py.DEST_NONE)
                    delay.append(1)
                elif d.is_host:
                    dest.append(_kernel_py.DEST_HOST)
                    delay.append(d.delay)
                else:
                    dest.append(self.axon_offset[tuple(d.core)] + d.axon)
                    delay.append(d.delay)

        syn_a = np.concatenate(syn_a) if syn_a else np.zeros(0, dtype=np.int64)
        syn_n = np.concatenate(syn_n) if syn_n else np.zeros(0, dtype=np.int64)
        syn_w = np.concatenate(syn_w) if syn_w else np.zeros(0, dtype=np.int64)
        order = np.argsort(syn_a, kind="stable")
        self.axon_ptr = np.zeros(self.n_axons + 1, dtype=np.int64)
        np.cumsum(np.bincount(syn_a, minlength=self.n_axons), out=self.axon_ptr[1:])
        self.syn_neuron = np.ascontiguousarray(syn_n[order], dtype=np.int32)
        self.syn_weight = np.ascontiguousarray(syn_w[order], dtype=np.int64)
        self.threshold = np.array(thr, dtype=np.int64)
        self.leak = np.array(leak, dtype=np.int64)
        self.reset = np.array(rst, dtype=np.int64)
        self.is_xor = np.array(xor, dtype=np.uint8)
        self.dest = np.array(dest, dtype=np.int32)
        self.delay = np.array(delay, dtype=np.int32)

    def global_axon(self, core: Coord, axon: int) -> int:
        core = tuple(core)
        if core not in self.axon_offset:
            raise ScheduleError(f"no core at {core}")
        if not 0 <= axon < len(self.grid.cores[core].axons):
            raise ScheduleError(f"axon {axon} out of range at {core}")
        return self.axon_offset[core] + axon

    def global_neuron(self, core: Coord, index: int) -> int:
        return self.neuron_offset[tuple(core)] + index


class SimulationState:
    """Mutable engine state: tick, potentials, pending spikes and trace."""

    def __init__(self, grid: GridConfig, flat: FlatGrid, ext_tick, ext_axon):
        self.grid = grid
        self.flat = flat
        self.tick = 0
        self.potentials = np.zeros(flat.n_neurons, dtype=np.int64)
        self.ring = np.zeros((RING_SIZE, flat.n_axons), dtype=np.int32)
        self.ext_tick = ext_tick
        self.ext_axon = ext_axon
        self.ext_pos = 0
        self.delivered = 0
        self._ticks: list[np.ndarray] = []
        self._neurons: list[np.ndarray] = []

    def copy(self) -> "SimulationState":
        other = copy.copy(self)
        other.potentials = self.potentials.copy()
        other.ring = self.ring.copy()
        other._ticks = list(self._ticks)
        other._neurons = list(self._neurons)
        return other

    def core_potentials(self, core: Coord) -> np.ndarray:
        off = self.flat.neuron_offset[tuple(core)]
        return self.potentials[off: off + len(self.grid.cores[tuple(core)].neurons)]

    def _spikes(self):
        if not self._ticks:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        if len(self._ticks) > 1:
            self._ticks = [np.concatenate(self._ticks)]
            self._neurons = [np.concatenate(self._neurons)]
        return self._ticks[0], self._neurons[0].astype(np.int64)

    @property
    def trace(self) -> TraceLog:
        ticks, neurons = self._spikes()
        host_mask = self.flat.dest[neurons] == _kernel_py.DEST_HOST
        h_ticks = ticks[host_mask] + self.flat.delay[neurons[host_mask]]
        h_loc = neurons[host_mask]
        keep = h_ticks <= self.tick
        order = np.lexsort((h_loc[keep], h_ticks[keep]))
        return TraceLog(self.flat.locations, ticks, neurons,
                        h_ticks[keep][order], h_loc[keep][order], self.tick)

    def produced_routed(self) -> int:
        """Spikes produced so far by neurons with an axon or host destination."""
        _, neurons = self._spikes()
        return int(np.count_nonzero(self.flat.dest[neurons] != _kernel_py.DEST_NONE))

    def pending_count(self) -> int:
        """Routed spikes produced but not yet delivered (axon or host)."""
        ticks, neurons = self._spikes()
        host = self.flat.dest[neurons] == _kernel_py.DEST_HOST
        late = ticks[host] + self.flat.delay[neurons[host]] > self.tick
        return int(self.ring.sum()) + int(np.count_nonzero(late))

    def host_delivered_count(self) -> int:
        return int(self.trace.host_tick.size)

    def _record(self, ticks, neurons):
        if ticks.size:
            self._ticks.append(ticks)
            self._neurons.append(neurons)


def init(grid: GridConfig, schedule: Optional[InputSchedule] = None, *,
         ext_tick=None, ext_axon=None) -> SimulationState:
    """Validate ``grid`` and build a state at tick 0.

    The schedule may be given as ``SpikeEvent`` objects or, for bulk
    workloads, as parallel arrays of ticks and global axon indices.
    """
    report = validate_grid(grid)
    if report:
        raise ConfigError("invalid grid: " + "; ".join(str(v) for v in report[:10]))
    flat = FlatGrid(grid)
    ticks: list[int] = []
    axons: list[int] = []
    if schedule is not None:
        for e in schedule.events:
            if e.core is None:
                raise ScheduleError("input events cannot target the host sink")
            if e.tick < 1:
                raise ScheduleError(f"event tick {e.tick} < 1")
            ticks.append(e.tick)
            axons.append(flat.global_axon(e.core, e.axon))
    t = np.array(ticks, dtype=np.int64)
    a = np.array(axons, dtype=np.int32)
    if ext_tick is not None:
        et = np.asarray(ext_tick, dtype=np.int64)
        ea = np.asarray(ext_axon, dtype=np.int32)
        if et.size and (et.min() < 1 or ea.min() < 0 or ea.max() >= flat.n_axons):
            raise ScheduleError("bulk schedule out of range")
        t = np.concatenate([t, et])
        a = np.concatenate([a, ea])
    order = np.argsort(t, kind="stable")
    return SimulationState(grid, flat, np.ascontiguousarray(t[order]),
                           np.ascontiguousarray(a[order]))


def _advance(state: SimulationState, until: int, kernel=None):
    k = _select_kernel(kernel)
    f = state.flat
    ticks, neurons, state.ext_pos, delivered = k.run_ticks(
        state.tick, until, f.axon_ptr, f.syn_neuron, f.syn_weight, f.threshold,
        f.leak, f.reset, f.is_xor, f.dest, f.delay, state.potentials, state.ring,
        state.ext_tick, state.ext_axon, state.ext_pos)
    state.delivered += int(delivered)
    state._record(np.asarray(ticks, dtype=np.int64), np.asarray(neurons, dtype=np.int32))
    state.tick = until


def step(state: SimulationState, kernel: Optional[str] = None) -> SimulationState:
    """Advance ``state`` by one tick in place and return it."""
    _advance(state, state.tick + 1, kernel)
    return state


def run(state: SimulationState, until_tick: int,
        kernel: Optional[str] = None) -> tuple[SimulationState, TraceLog]:
    """Step until ``until_tick`` and return the state with its full trace."""
    if until_tick < state.tick:
        raise ValueError(f"until_tick {until_tick} is before current tick {state.tick}")
    if until_tick > state.tick:
        _advance(state, until_tick, kernel)
    return state, state.trace


def step_reference(state: SimulationState, order: Optional[Sequence[Coord]] = None,
                   executor=None) -> SimulationState:
    """One tick evaluated core by core with ``fabric.core_step``.

    ``order`` permutes core evaluation; ``executor`` (a
    ``concurrent.futures.Executor``) evaluates cores concurrently.  Routing
    happens after all cores have joined.
    """
    f = state.flat
    t = state.tick + 1
    slot = t % RING_SIZE
    counts = state.ring[slot].copy()
    state.delivered += int(counts.sum())
    active = counts > 0
    state.ring[slot] = 0
    while state.ext_pos < state.ext_tick.size and state.ext_tick[state.ext_pos] == t:
        active[state.ext_axon[state.ext_pos]] = True
        state.ext_pos += 1

    coords = list(order) if order is not None else list(f.coords)
    if sorted(coords) != sorted(f.coords):
        raise ValueError("order must be a permutation of the grid's cores")

    def evaluate(c):
        core = state.grid.cores[c]
        a0 = f.axon_offset[c]
        n0 = f.neuron_offset[c]
        return c, core_step(core, active[a0: a0 + len(core.axons)],
                            state.potentials[n0: n0 + len(core.neurons)])

    if executor is None:
        results = [evaluate(c) for c in coords]
    else:
        results = list(executor.map(evaluate, coords))

    fired_all = []
    for c, (spikes, pots) in results:
        n0 = f.neuron_offset[c]
        state.potentials[n0: n0 + pots.size] = pots
        fired_all.append(np.flatnonzero(spikes) + n0)
    fired = np.sort(np.concatenate(fired_all)) if fired_all else np.zeros(0, np.int64)
    go = fired[f.dest[fired] >= 0]
    np.add.at(state.ring, ((t + f.delay[go]) % RING_SIZE, f.dest[go]), 1)
    state._record(np.full(fired.size, t, dtype=np.int64), fired.astype(np.int32))
    state.tick = t
    return state


def spike_count(trace: TraceLog, cores: Optional[Iterable[Coord]] = None) -> int:
    """Number of neuron spikes in ``trace``, optionally restricted to ``cores``."""
    if cores is None:
        return trace.total_spike_count
    wanted = {tuple(c) for c in cores}
    ids = np.array([i for i, loc in enumerate(trace.locations) if loc.core in wanted],
                   dtype=np.int64)
    return int(np.count_nonzero(np.isin(trace.spike_loc, ids)))
