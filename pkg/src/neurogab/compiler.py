"""Lower a regular parity-check matrix into a Gallager-B decoder grid.

Core roles and their per-word timeline (tick offsets from the word's first
tick ``s``; ``L`` is the VNU->CNU->VNU loop length, 2 for the XOR variant
and 3 for the baseline, ``I`` is max_iter):

* ``s``           Input core receives the word and ``en``.
* ``s + 1 + L*k`` VNU emits iteration ``k`` messages and decision x'_k
  (``k = 0`` is the received word itself).
* ``s + 2 + L*k`` Parity evaluates the syndrome of x'_k (the baseline adds
  one tick for the second XOR layer), then Syndrome, OR and Output follow
  one tick apart, and the host sees the result one tick later.
* ``s + L*(I+1)`` ``rst_in`` clears the input register; the VNU reset lands
  on the first enable after the last iteration, the same tick the
  iteration counter fires.

Words are issued every ``ticks_per_word`` ticks regardless of convergence;
the host keeps the first emission of each word.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import engine
from .fabric import (
    AxonEntry,
    CapacityError,
    ConfigError,
    Coord,
    CoreConfig,
    Destination,
    GridConfig,
    SpikeEvent,
)
from .funclib import lif, make_core, xor_layer_leak, xor_neuron
from .gab import DecoderParams, HMatrix, bits


class Variant(enum.Enum):
    XOR_INTEGRATED = "xor"
    BASELINE = "baseline"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        v = str(value).lower()
        for member in cls:
            if v in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown variant {value!r}")


# ticks per GaB iteration, per-word constant, final-word tail
LOOP_TICKS = {Variant.XOR_INTEGRATED: 2, Variant.BASELINE: 3}
WORD_CONSTANT = {Variant.XOR_INTEGRATED: 5, Variant.BASELINE: 4}
TAIL_TICKS = {Variant.XOR_INTEGRATED: 2, Variant.BASELINE: 4}
# counter offset: ticks from the first counted tick to the last decision reaching OR
COUNTER_OFFSET = {Variant.XOR_INTEGRATED: 4, Variant.BASELINE: 6}
# Parity pass-through delay so x' meets `done` at the Output core
PARITY_DELAY = {Variant.XOR_INTEGRATED: 3, Variant.BASELINE: 4}

ROLE_COORDS: dict[str, Coord] = {
    "input": (0, 0),
    "vnu": (1, 0),
    "cnu": (2, 0),
    "iteration_counter": (0, 1),
    "parity": (1, 1),
    "syndrome": (2, 1),
    "or": (0, 2),
    "output": (1, 2),
    "baseline_xor": (2, 2),
}


def _max_iter(params) -> int:
    return params.max_iter if isinstance(params, DecoderParams) else int(params)


def iteration_threshold(params, variant) -> int:
    """Threshold of the i_max counter neuron."""
    variant = Variant.parse(variant)
    max_iter = _max_iter(params)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    return (max_iter - 1) * LOOP_TICKS[variant] + COUNTER_OFFSET[variant]


def predicted_ticks(variant, w_c: int, max_iter: int) -> int:
    variant = Variant.parse(variant)
    if w_c < 0 or max_iter < 1:
        raise ValueError("need w_c >= 0 and max_iter >= 1")
    if variant is Variant.BASELINE:
        return w_c * (3 * max_iter + 4) + 4
    return w_c * (2 * max_iter + 5) + 2


@dataclass
class DecoderLayout:
    grid: GridConfig
    variant: Variant
    h: HMatrix
    params: DecoderParams
    roles: dict[str, Coord]
    port_map: dict[str, tuple[Coord, int]]
    xor_neurons: list[tuple[Coord, int]] = field(default_factory=list)

    @property
    def max_iter(self) -> int:
        return self.params.max_iter

    @property
    def loop_ticks(self) -> int:
        return LOOP_TICKS[self.variant]

    @property
    def ticks_per_word(self) -> int:
        return self.loop_ticks * self.max_iter + WORD_CONSTANT[self.variant]

    @property
    def tail_ticks(self) -> int:
        return TAIL_TICKS[self.variant]

    @property
    def reset_offset(self) -> int:
        return self.loop_ticks * (self.max_iter + 1)

    @property
    def iteration_threshold(self) -> int:
        return iteration_threshold(self.params, self.variant)

    def predicted_total_ticks(self, w_c: int) -> int:
        return self.ticks_per_word * w_c + self.tail_ticks

    def core(self, role: str) -> CoreConfig:
        return self.grid.cores[self.roles[role]]

    def core_report(self) -> list[tuple[str, Coord, int, int]]:
        return [(role, c, len(self.grid.cores[c].axons), len(self.grid.cores[c].neurons))
                for role, c in self.roles.items()]


class _Builder:
    def __init__(self, h: HMatrix, params: DecoderParams, variant: Variant):
        self.h = h
        self.params = params
        self.variant = variant
        self.N, self.M = h.N, h.M
        self.d_v, self.d_c = h.d_v, h.d_c
        self.edges = h.edges()
        self.edge_index = {e: i for i, e in enumerate(self.edges)}
        self.baseline = variant is Variant.BASELINE
        self.roles = {r: c for r, c in ROLE_COORDS.items()
                      if r != "baseline_xor" or self.baseline}
        self.axon_ix: dict[tuple[str, str], int] = {}
        self.xor_neurons: list[tuple[Coord, int]] = []

    # axon layouts are fixed before neurons so destinations can be resolved
    def axon_layouts(self) -> dict[str, list[AxonEntry]]:
        N, M = self.N, self.M
        L: dict[str, list[AxonEntry]] = {}
        L["input"] = ([AxonEntry(0, f"r{n}") for n in range(N)]
                      + [AxonEntry(0, f"rf{n}") for n in range(N)]
                      + [AxonEntry(0, "en"), AxonEntry(1, "rst_in")])
        L["vnu"] = ([AxonEntry(4, "rst_v"), AxonEntry(2, "en_v")]
                    + [AxonEntry(1, f"c{m}v{n}") for m, n in self.edges]
                    + [AxonEntry(3, "init_v")]
                    + [AxonEntry(0, f"r{n}") for n in range(N)])
        L["cnu"] = [AxonEntry(0, f"v{n}c{m}") for m, n in self.edges] + [AxonEntry(1, "en_c")]
        L["iteration_counter"] = [AxonEntry(0, "i"), AxonEntry(0, "init_it"),
                                  AxonEntry(1, "rst_it")]
        L["parity"] = [AxonEntry(0, f"x'{n}") for n in range(N)] + [AxonEntry(1, "en_p")]
        L["syndrome"] = [AxonEntry(0, "en_s")] + [AxonEntry(1, f"s{m}") for m in range(M)]
        L["or"] = [AxonEntry(0, "zero"), AxonEntry(0, "imax")]
        L["output"] = ([AxonEntry(0, f"x'{n}") for n in range(N)]
                       + [AxonEntry(0, "done"), AxonEntry(0, "zero")])
        if self.baseline:
            ax = []
            for m, n in self.edges:
                ax += [AxonEntry(0 if k % 2 else 1, f"c{m}v{n}_pa{k}")
                       for k in range(1, self.d_c)]
            for m in range(M):
                ax += [AxonEntry(0 if k % 2 else 1, f"s{m}_pa{k}")
                       for k in range(1, self.d_c + 1)]
            ax += [AxonEntry(2, "en_v_in"), AxonEntry(2, "en_s_in")]
            L["baseline_xor"] = ax
        for role, axons in L.items():
            for i, a in enumerate(axons):
                self.axon_ix[(role, a.label)] = i
        return L

    def to(self, role: str, label: str, delay: int = 1) -> Destination:
        return Destination(self.roles[role], self.axon_ix[(role, label)], delay)

    def ax(self, role: str, label: str) -> int:
        return self.axon_ix[(role, label)]

    def input_core(self, axons):
        N = self.N
        neurons, fan = [], []
        rst = self.ax("input", "rst_in")
        for n in range(N):
            neurons.append(lif((1, -2), dest=self.to("input", f"rf{n}"), label=f"r{n}_fb"))
            fan.append((self.ax("input", f"r{n}"), self.ax("input", f"rf{n}"), rst))
        for n in range(N):
            neurons.append(lif((1, -2), dest=self.to("vnu", f"r{n}"), label=f"r{n}_v"))
            fan.append((self.ax("input", f"r{n}"), self.ax("input", f"rf{n}"), rst))
        en = self.ax("input", "en")
        neurons += [
            lif((1, 0), dest=self.to("iteration_counter", "init_it"), label="init_it"),
            lif((0, 1), dest=self.to("iteration_counter", "rst_it"), label="rst_it"),
            lif((1, 0), dest=self.to("vnu", "init_v"), label="init_v"),
            lif((0, 1), dest=self.to("vnu", "rst_v"), label="rst_v"),
        ]
        fan += [(en,), (rst,), (en,), (rst,)]
        return neurons, fan

    def vnu_core(self, axons):
        d_v = self.d_v
        # gate weight exceeds any data sum so nothing fires without en_v/init_v
        gate = d_v + 3
        kill = -3 * gate
        even = d_v % 2 == 0
        # messages: tie goes to r_n, so r_n weighs 2 when a tie is possible
        w_r2, k2 = (2, d_v // 2 + 1) if even else (1, (d_v + 1) // 2)
        # decisions: d_v + 1 voters, tie possible only for odd d_v
        w_r3, k3 = (1, d_v // 2 + 1) if even else (2, (d_v + 1) // 2 + 1)
        rst, en, init = self.ax("vnu", "rst_v"), self.ax("vnu", "en_v"), self.ax("vnu", "init_v")
        neurons = [
            lif((0, 0, 1, 1, kill), dest=self.to("cnu", "en_c"), label="en_c"),
            lif((0, 0, 1, 1, kill),
                dest=self.to("parity", "en_p"), label="en_p"),
        ]
        fan = [(en, init, rst), (en, init, rst)]
        for m, n in self.edges:
            others = [self.ax("vnu", f"c{t}v{n}") for t in self.h.checks_of(n) if t != m]
            neurons.append(lif((w_r2, 1, gate, gate + k2 - w_r2, kill),
                               leak=-(k2 - 1) - gate,
                               dest=self.to("cnu", f"v{n}c{m}"), label=f"v{n}c{m}"))
            fan.append([self.ax("vnu", f"r{n}"), *others, en, init, rst])
        for n in range(self.N):
            votes = [self.ax("vnu", f"c{t}v{n}") for t in self.h.checks_of(n)]
            neurons.append(lif((w_r3, 1, gate, gate + k3 - w_r3, kill),
                               leak=-(k3 - 1) - gate,
                               dest=self.to("parity", f"x'{n}"), label=f"x'{n}"))
            fan.append([self.ax("vnu", f"r{n}"), *votes, en, init, rst])
        return neurons, fan

    def cnu_core(self, axons):
        neurons, fan = [], []
        coord = self.roles["cnu"]
        for m, n in self.edges:
            others = [self.ax("cnu", f"v{t}c{m}") for t in self.h.variables_of(m) if t != n]
            if self.baseline:
                for k in range(1, self.d_c):
                    self.xor_neurons.append((coord, len(neurons)))
                    neurons.append(lif((1, 0), leak=xor_layer_leak(k),
                                       dest=self.to("baseline_xor", f"c{m}v{n}_pa{k}"),
                                       label=f"c{m}v{n}_p{k}"))
                    fan.append(others)
            else:
                self.xor_neurons.append((coord, len(neurons)))
                neurons.append(xor_neuron((1, 0), dest=self.to("vnu", f"c{m}v{n}"),
                                          label=f"c{m}v{n}"))
                fan.append(others)
        en_dest = (self.to("baseline_xor", "en_v_in") if self.baseline
                   else self.to("vnu", "en_v"))
        neurons.append(lif((0, 1), dest=en_dest, label="en"))
        fan.append((self.ax("cnu", "en_c"),))
        return neurons, fan

    def baseline_xor_core(self, axons):
        neurons, fan = [], []
        coord = self.roles["baseline_xor"]
        for m, n in self.edges:
            self.xor_neurons.append((coord, len(neurons)))
            neurons.append(lif((1, -1, 0), dest=self.to("vnu", f"c{m}v{n}"),
                               label=f"c{m}v{n}"))
            fan.append([self.ax("baseline_xor", f"c{m}v{n}_pa{k}") for k in range(1, self.d_c)])
        for m in range(self.M):
            self.xor_neurons.append((coord, len(neurons)))
            neurons.append(lif((1, -1, 0), dest=self.to("syndrome", f"s{m}"), label=f"s{m}"))
            fan.append([self.ax("baseline_xor", f"s{m}_pa{k}")
                        for k in range(1, self.d_c + 1)])
        neurons.append(lif((0, 0, 1), dest=self.to("vnu", "en_v"), label="en_v"))
        fan.append((self.ax("baseline_xor", "en_v_in"),))
        neurons.append(lif((0, 0, 1), dest=self.to("syndrome", "en_s"), label="en_s"))
        fan.append((self.ax("baseline_xor", "en_s_in"),))
        return neurons, fan

    def counter_core(self, axons):
        i, init, rst = (self.ax("iteration_counter", a) for a in ("i", "init_it", "rst_it"))
        neurons = [
            lif((1, -2), dest=self.to("iteration_counter", "i"), label="i_fb"),
            lif((1, 0), threshold=iteration_threshold(self.params, self.variant),
                dest=self.to("or", "imax"), label="i_max"),
        ]
        return neurons, [(i, init, rst), (i,)]

    def parity_core(self, axons):
        en_p = self.ax("parity", "en_p")
        coord = self.roles["parity"]
        if self.baseline:
            neurons = [lif((0, 1), dest=self.to("baseline_xor", "en_s_in"), label="en_s")]
            fan = [(en_p,)]
            for m in range(self.M):
                inputs = [self.ax("parity", f"x'{n}") for n in self.h.variables_of(m)]
                for k in range(1, self.d_c + 1):
                    self.xor_neurons.append((coord, len(neurons)))
                    neurons.append(lif((1, 0), leak=xor_layer_leak(k),
                                       dest=self.to("baseline_xor", f"s{m}_pa{k}"),
                                       label=f"s{m}_p{k}"))
                    fan.append(inputs)
        else:
            neurons = [lif((0, 1), dest=self.to("syndrome", "en_s"), label="en_s")]
            fan = [(en_p,)]
            for m in range(self.M):
                self.xor_neurons.append((coord, len(neurons)))
                neurons.append(xor_neuron((1, 0), dest=self.to("syndrome", f"s{m}"),
                                          label=f"s{m}"))
                fan.append([self.ax("parity", f"x'{n}") for n in self.h.variables_of(m)])
        delay = PARITY_DELAY[self.variant]
        for n in range(self.N):
            neurons.append(lif((1, 0), dest=self.to("output", f"x'{n}", delay), label=f"x'{n}"))
            fan.append((self.ax("parity", f"x'{n}"),))
        return neurons, fan

    def syndrome_core(self, axons):
        return ([lif((1, -1), dest=self.to("or", "zero"), label="zero")],
                [range(len(axons))])

    def or_core(self, axons):
        zero, imax = self.ax("or", "zero"), self.ax("or", "imax")
        return ([lif((1,), dest=self.to("output", "done"), label="done"),
                 lif((1,), dest=self.to("output", "zero"), label="zero")],
                [(zero, imax), (zero,)])

    def output_core(self, axons):
        done, zero = self.ax("output", "done"), self.ax("output", "zero")
        host = Destination(None)
        neurons = [lif((1,), leak=-1, dest=host, label=f"x'{n}") for n in range(self.N)]
        fan = [(self.ax("output", f"x'{n}"), done) for n in range(self.N)]
        neurons += [lif((1,), dest=host, label="zero"), lif((1,), dest=host, label="done")]
        fan += [(zero,), (done,)]
        return neurons, fan

    def build(self) -> DecoderLayout:
        layouts = self.axon_layouts()
        makers = {
            "input": self.input_core, "vnu": self.vnu_core, "cnu": self.cnu_core,
            "iteration_counter": self.counter_core, "parity": self.parity_core,
            "syndrome": self.syndrome_core, "or": self.or_core, "output": self.output_core,
            "baseline_xor": self.baseline_xor_core,
        }
        cores = {}
        for role, coord in self.roles.items():
            neurons, fan = makers[role](layouts[role])
            try:
                cores[coord] = make_core(layouts[role], neurons, fan, role)
            except CapacityError as exc:
                raise CapacityError(f"{role} core: {len(layouts[role])} axons, "
                                    f"{len(neurons)} neurons exceed 256x256") from exc
        out = self.roles["output"]
        inp = self.roles["input"]
        port_map = {f"r{n}": (inp, self.ax("input", f"r{n}")) for n in range(self.N)}
        port_map["en"] = (inp, self.ax("input", "en"))
        port_map["rst_in"] = (inp, self.ax("input", "rst_in"))
        for n in range(self.N):
            port_map[f"x'{n}"] = (out, n)
        port_map["zero"] = (out, self.N)
        port_map["done"] = (out, self.N + 1)
        grid = GridConfig(3, 3, cores)
        return DecoderLayout(grid, self.variant, self.h, self.params, dict(self.roles),
                             port_map, self.xor_neurons)


def compile(h: HMatrix, params: DecoderParams = DecoderParams(),
            variant=Variant.XOR_INTEGRATED) -> DecoderLayout:
    """Build the decoder grid for ``h``.

    Raises ``ConfigError`` for irregular matrices or non-default vote
    thresholds and ``CapacityError`` when a core overflows 256x256.
    """
    variant = Variant.parse(variant)
    if not h.is_regular:
        raise ConfigError("H is not regular (column/row degrees differ)")
    if (params.tie_threshold, params.decision_threshold) != (None, None):
        defaults = DecoderParams(params.max_iter).thresholds(h.d_v)
        if params.thresholds(h.d_v) != defaults:
            raise ConfigError("the fabric implements only the default vote thresholds")
    return _Builder(h, params, variant).build()


@dataclass
class WordSchedule:
    schedule: engine.InputSchedule
    word_starts: list[int]
    windows: list[tuple[int, int]]
    total_ticks: int


def make_word_schedule(layout: DecoderLayout, words: Sequence) -> WordSchedule:
    """Fixed per-word timeline; word ``i`` starts at tick ``1 + i * ticks_per_word``."""
    period = layout.ticks_per_word
    tail = layout.tail_ticks
    events, starts, windows = [], [], []
    for i, w in enumerate(words):
        w = bits(w)
        if w.size != layout.h.N:
            raise ValueError(f"word {i} has length {w.size}, decoder expects {layout.h.N}")
        s = 1 + i * period
        starts.append(s)
        windows.append((s + tail, s + period + tail - 1))
        for n in np.flatnonzero(w):
            core, axon = layout.port_map[f"r{n}"]
            events.append(SpikeEvent(s, core, axon))
        core, axon = layout.port_map["en"]
        events.append(SpikeEvent(s, core, axon))
        core, axon = layout.port_map["rst_in"]
        events.append(SpikeEvent(s + layout.reset_offset, core, axon))
    total = layout.predicted_total_ticks(len(words))
    return WordSchedule(engine.InputSchedule(events, total), starts, windows, total)


@dataclass
class WordResult:
    word: str
    x_prime: Optional[str]
    converged: bool
    output_tick: Optional[int]


@dataclass
class DecodeRun:
    results: list[WordResult]
    trace: engine.TraceLog
    schedule: WordSchedule
    last_output_tick: Optional[int]
    state: engine.SimulationState

    @property
    def total_ticks(self) -> int:
        return self.schedule.total_ticks


def collect_results(layout: DecoderLayout, words: Sequence, trace: engine.TraceLog,
                    ws: WordSchedule) -> list[WordResult]:
    out_coord = layout.roles["output"]
    by_tick: dict[int, set[str]] = {}
    for tick, loc in trace.host_deliveries():
        if loc.core == out_coord:
            by_tick.setdefault(tick, set()).add(loc.label)
    done_ticks = sorted(t for t, labels in by_tick.items() if "done" in labels)
    results = []
    for w, (lo, hi) in zip(words, ws.windows):
        word = w if isinstance(w, str) else "".join(str(int(b)) for b in w)
        first = next((t for t in done_ticks if lo <= t <= hi), None)
        if first is None:
            results.append(WordResult(word, None, False, None))
            continue
        labels = by_tick[first]
        x = "".join("1" if f"x'{n}" in labels else "0" for n in range(layout.h.N))
        results.append(WordResult(word, x, "zero" in labels, first))
    return results


def decode_words(layout: DecoderLayout, words: Sequence, kernel: Optional[str] = None,
                 extra_ticks: int = 0) -> DecodeRun:
    """Run ``words`` through the fabric back to back and read the host outputs."""
    ws = make_word_schedule(layout, words)
    state = engine.init(layout.grid, ws.schedule)
    state, trace = engine.run(state, ws.total_ticks + extra_ticks, kernel=kernel)
    results = collect_results(layout, words, trace, ws)
    host = trace.host_tick
    last = int(host.max()) if host.size else None
    return DecodeRun(results, trace, ws, last, state)
