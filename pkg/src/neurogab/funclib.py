"""Logic primitives mapped onto cores, plus a truth-table harness.

Each builder returns a :class:`CircuitFragment` placed at the origin of a
small grid.  Thresholds are 1 throughout; leaks encode how many inputs
must agree (``leak = -(k - 1)`` spikes iff at least ``k`` unit inputs).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import engine
from .fabric import (
    DEFAULT_CAPACITY,
    AxonEntry,
    CapacityError,
    ConfigError,
    Coord,
    CoreConfig,
    Destination,
    GridConfig,
    NeuronConfig,
    OpSelect,
    SpikeEvent,
)


def lif(weights, threshold=1, leak=0, reset=0, dest: Optional[Destination] = None,
        label="") -> NeuronConfig:
    return NeuronConfig(tuple(weights), threshold, leak, reset, OpSelect.LIF, dest, label)


def xor_neuron(weights, dest: Optional[Destination] = None, label="") -> NeuronConfig:
    return NeuronConfig(tuple(weights), 1, 0, 0, OpSelect.XOR, dest, label)


def make_core(axons: Sequence[AxonEntry], neurons: Sequence[NeuronConfig],
              fan_in: Sequence[Sequence[int]], role="",
              capacity=DEFAULT_CAPACITY) -> CoreConfig:
    """Build a core; ``fan_in[j]`` lists the axon indices wired to neuron ``j``."""
    if len(axons) > capacity[0] or len(neurons) > capacity[1]:
        raise CapacityError(f"{role or 'core'}: {len(axons)} axons / {len(neurons)} "
                            f"neurons exceed capacity {capacity}")
    xbar = np.zeros((len(axons), len(neurons)), dtype=bool)
    for j, src in enumerate(fan_in):
        xbar[list(src), j] = True
    return CoreConfig(list(axons), list(neurons), xbar, capacity, role)


@dataclass
class CircuitFragment:
    cores: dict[Coord, CoreConfig]
    inputs: dict[str, tuple[Coord, int]]
    outputs: dict[str, tuple[Coord, int]]
    latency_ticks: int
    data_ports: list[str]
    bias_ports: list[str] = field(default_factory=list)
    name: str = ""

    @property
    def n_neurons(self) -> int:
        return sum(len(c.neurons) for c in self.cores.values())

    def to_grid(self) -> GridConfig:
        w = max(x for x, _ in self.cores) + 1
        h = max(y for _, y in self.cores) + 1
        return GridConfig(w, h, dict(self.cores))


def build_register(bits: int, capacity=DEFAULT_CAPACITY) -> CircuitFragment:
    """``bits``-wide register: Q_i spikes every tick from D_i until Reset."""
    if bits < 1:
        raise ConfigError("register needs at least one bit")
    if 2 * bits + 1 > capacity[0] or 2 * bits > capacity[1]:
        raise CapacityError(f"{bits}-bit register needs {2 * bits + 1} axons and "
                            f"{2 * bits} neurons; capacity is {capacity}")
    axons, neurons, fan_in = [], [], []
    reset = 2 * bits
    for i in range(bits):
        axons += [AxonEntry(0, f"D{i}"), AxonEntry(0, f"F{i}")]
    axons.append(AxonEntry(1, "Reset"))
    for i in range(bits):
        d, f = 2 * i, 2 * i + 1
        neurons.append(lif((1, -2), label=f"Q{i}"))
        neurons.append(lif((1, -2), dest=Destination((0, 0), f), label=f"D'{i}"))
        fan_in += [(d, f, reset), (d, f, reset)]
    core = make_core(axons, neurons, fan_in, "register", capacity)
    return CircuitFragment(
        {(0, 0): core},
        {**{f"D{i}": ((0, 0), 2 * i) for i in range(bits)}, "Reset": ((0, 0), reset)},
        {f"Q{i}": ((0, 0), 2 * i) for i in range(bits)},
        latency_ticks=0,
        data_ports=[f"D{i}" for i in range(bits)],
        name=f"register{bits}",
    )


def build_majority(inputs: int) -> CircuitFragment:
    """Majority vote; even arities break ties toward the T input (weight 2).

    Arity 2 is the tie-weighted form used for variable-to-check messages
    with two votes (T, A): spikes iff T spikes.
    """
    if inputs == 3:
        ports, types, weights, leak = ["T", "A", "B"], [0, 0, 0], (1,), -1
    elif inputs == 4:
        ports, types, weights, leak = ["T", "A", "B", "C"], [0, 1, 1, 1], (2, 1), -2
    elif inputs == 2:
        ports, types, weights, leak = ["T", "A"], [0, 1], (2, 1), -1
    else:
        raise ConfigError(f"unsupported majority arity {inputs}")
    axons = [AxonEntry(t, p) for t, p in zip(types, ports)]
    core = make_core(axons, [lif(weights, leak=leak, label="M")], [range(inputs)],
                     f"majority{inputs}")
    return CircuitFragment({(0, 0): core}, {p: ((0, 0), i) for i, p in enumerate(ports)},
                           {"M": ((0, 0), 0)}, 0, ports, name=f"majority{inputs}")


def _two_input(name, weights, leak, bias=False) -> CircuitFragment:
    ports = ["A", "B"]
    axons = [AxonEntry(0, "A"), AxonEntry(0, "B")]
    if bias:
        axons.append(AxonEntry(1, "S"))
    core = make_core(axons, [lif(weights, leak=leak, label="Out")], [range(len(axons))],
                     name)
    inputs = {a.label: ((0, 0), i) for i, a in enumerate(axons)}
    return CircuitFragment({(0, 0): core}, inputs, {"Out": ((0, 0), 0)}, 0, ports,
                           ["S"] if bias else [], name)


def build_and2() -> CircuitFragment:
    return _two_input("and2", (1,), -1)


def build_or2() -> CircuitFragment:
    return _two_input("or2", (1,), 0)


def build_nor2() -> CircuitFragment:
    """NOR with an always-on bias axon S (+1) and inputs at -1."""
    return _two_input("nor2", (-1, 1), 0, bias=True)


def xor_layer_leak(k: int) -> int:
    """Leak of the k-th counting neuron: spikes iff at least k unit inputs."""
    return -(k - 1)


def build_xor_baseline(n: int, capacity=DEFAULT_CAPACITY) -> CircuitFragment:
    """n-input parity from LIF neurons over two cores.

    Layer 1 neuron p_k spikes iff at least k inputs spike; layer 2 sums the
    p axons with alternating +1/-1 weights, so O spikes iff the count is odd.
    O fires one tick after the inputs arrive.
    """
    if n < 2:
        raise ConfigError("XOR needs at least two inputs")
    if n + 1 > capacity[1] or n > capacity[0]:
        raise CapacityError(f"{n}-input XOR needs {n + 1} neurons; capacity {capacity}")
    l1_axons = [AxonEntry(0, f"a{i + 1}") for i in range(n)]
    l1_neurons = [lif((1,), leak=xor_layer_leak(k), dest=Destination((1, 0), k - 1),
                      label=f"p{k}") for k in range(1, n + 1)]
    layer1 = make_core(l1_axons, l1_neurons, [range(n)] * n, "xor_layer1", capacity)
    l2_axons = [AxonEntry(0 if k % 2 else 1, f"pa{k}") for k in range(1, n + 1)]
    layer2 = make_core(l2_axons, [lif((1, -1), label="O")], [range(n)], "xor_layer2",
                       capacity)
    ports = [f"a{i + 1}" for i in range(n)]
    return CircuitFragment({(0, 0): layer1, (1, 0): layer2},
                           {p: ((0, 0), i) for i, p in enumerate(ports)},
                           {"O": ((1, 0), 0)}, 1, ports, name=f"xor_baseline{n}")


def build_xor_integrated(n: int, capacity=DEFAULT_CAPACITY) -> CircuitFragment:
    """n-input parity on one XOR-mode neuron, same tick as the inputs."""
    if n < 2:
        raise ConfigError("XOR needs at least two inputs")
    if n > capacity[0]:
        raise CapacityError(f"{n}-input XOR exceeds {capacity[0]} axons")
    ports = [f"a{i + 1}" for i in range(n)]
    core = make_core([AxonEntry(0, p) for p in ports], [xor_neuron((1,), label="O")],
                     [range(n)], "xor_integrated", capacity)
    return CircuitFragment({(0, 0): core}, {p: ((0, 0), i) for i, p in enumerate(ports)},
                           {"O": ((0, 0), 0)}, 0, ports, name=f"xor_integrated{n}")


def evaluate_combinational(frag: CircuitFragment, pattern: Sequence[int]) -> list[bool]:
    """Apply ``pattern`` to the data ports at tick 1 and sample the outputs.

    Bias ports are driven every tick up to the sampling tick
    ``1 + latency_ticks``.  Each call runs a fresh simulation.
    """
    pattern = [int(b) for b in pattern]
    if len(pattern) != len(frag.data_ports):
        raise ValueError(f"pattern length {len(pattern)} != {len(frag.data_ports)} ports")
    sample = 1 + frag.latency_ticks
    events = []
    for port, bit in zip(frag.data_ports, pattern):
        if bit:
            core, axon = frag.inputs[port]
            events.append(SpikeEvent(1, core, axon))
    for port in frag.bias_ports:
        core, axon = frag.inputs[port]
        events += [SpikeEvent(t, core, axon) for t in range(1, sample + 1)]
    state = engine.init(frag.to_grid(), engine.InputSchedule(events))
    _, trace = engine.run(state, sample)
    fired = trace.spikes_at(sample)
    return [frag.outputs[name] in fired for name in frag.outputs]


ALL_BUILDERS = {
    "and2": build_and2,
    "or2": build_or2,
    "nor2": build_nor2,
    "majority3": lambda: build_majority(3),
    "majority4": lambda: build_majority(4),
}


def _majority_ref(n):
    if n == 3:
        return lambda p: [sum(p) >= 2]
    # T is port 0 and breaks ties
    return lambda p: [2 * p[0] + sum(p[1:]) >= 3]


def reference_functions() -> dict:
    """name -> (fragment factory, boolean reference over data ports)."""
    refs = {
        "and2": (build_and2, lambda p: [p[0] and p[1]]),
        "or2": (build_or2, lambda p: [p[0] or p[1]]),
        "nor2": (build_nor2, lambda p: [not (p[0] or p[1])]),
        "majority3": (lambda: build_majority(3), _majority_ref(3)),
        "majority4": (lambda: build_majority(4), _majority_ref(4)),
    }
    parity = lambda p: [sum(p) % 2 == 1]  # noqa: E731
    for n in range(2, 6):
        refs[f"xor_baseline{n}"] = (lambda n=n: build_xor_baseline(n), parity)
    for n in range(2, 9):
        refs[f"xor_integrated{n}"] = (lambda n=n: build_xor_integrated(n), parity)
    return refs


def truth_table_mismatches(frag: CircuitFragment, ref) -> list[tuple]:
    """Exhaustive check; returns (pattern, expected, got) for every mismatch."""
    bad = []
    for pattern in itertools.product((0, 1), repeat=len(frag.data_ports)):
        got = evaluate_combinational(frag, pattern)
        want = [bool(x) for x in ref(pattern)]
        if got != want:
            bad.append((pattern, want, got))
    return bad


def register_model_check(max_len: int = 10, bits: int = 1,
                         frag: Optional[CircuitFragment] = None) -> tuple[int, list]:
    """Check the register against ``Q_t = not Reset_t and (D_t or Q_{t-1})``.

    Explores every per-tick input choice (nothing, D, Reset, both) on every
    bit up to ``max_len`` ticks.  Fabric states are merged when potentials,
    pending spikes and the reference latch coincide, so the search covers
    all schedules.  Returns (distinct states visited, counterexamples).
    """
    frag = frag if frag is not None else build_register(bits)
    grid = frag.to_grid()
    base = engine.init(grid, engine.InputSchedule())
    flat = base.flat
    d_ax = [flat.global_axon(*frag.inputs[f"D{i}"]) for i in range(bits)]
    r_ax = flat.global_axon(*frag.inputs["Reset"])
    q_ids = [flat.global_neuron(*frag.outputs[f"Q{i}"]) for i in range(bits)]
    actions = list(itertools.product(itertools.product((0, 1), repeat=bits), (0, 1)))

    def key(st, latch):
        return st.potentials.tobytes(), np.roll(st.ring, -st.tick, axis=0).tobytes(), latch

    frontier = [(base, (False,) * bits, ())]
    seen = {key(base, (False,) * bits)}
    failures = []
    for _ in range(max_len):
        nxt = []
        for st, latch, history in frontier:
            for d, r in actions:
                s2 = st.copy()
                t = s2.tick + 1
                axons = [a for a, on in zip(d_ax, d) if on] + ([r_ax] if r else [])
                s2.ext_tick = np.full(len(axons), t, dtype=np.int64)
                s2.ext_axon = np.array(axons, dtype=np.int32)
                s2.ext_pos = 0
                s2._ticks, s2._neurons = [], []
                engine.step(s2)
                fired = set(s2.trace.spike_loc.tolist())
                want = tuple((not r) and (bool(di) or li) for di, li in zip(d, latch))
                got = tuple(q in fired for q in q_ids)
                hist = history + ((d, r),)
                if got != want:
                    failures.append((hist, want, got))
                    continue
                k = key(s2, want)
                if k not in seen:
                    seen.add(k)
                    nxt.append((s2, want, hist))
        frontier = nxt
    return len(seen), failures
