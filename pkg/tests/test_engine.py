import random
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from neurogab import engine
from neurogab.compiler import Variant, decode_words, make_word_schedule
from neurogab.fabric import AxonEntry, ConfigError, GridConfig, SpikeEvent
from neurogab.funclib import build_register, build_xor_baseline, lif, make_core
from neurogab.fabric import Destination


def kernels():
    out = ["python"]
    try:
        engine._select_kernel("cython")
        out.append("cython")
    except ImportError:
        pass
    return out


def test_init_state():
    state = engine.init(GridConfig(1, 1, {}), engine.InputSchedule())
    assert state.tick == 0
    assert state.trace.total_spike_count == 0


def test_init_rejects_absent_core():
    frag = build_register(1)
    sched = engine.InputSchedule([SpikeEvent(1, (5, 5), 0)])
    with pytest.raises(ConfigError):
        engine.init(frag.to_grid(), sched)


def test_init_rejects_invalid_grid():
    core = make_core([AxonEntry(0)], [lif((1,), dest=Destination((9, 9), 0))], [(0,)])
    with pytest.raises(ConfigError):
        engine.init(GridConfig(1, 1, {(0, 0): core}))


def test_empty_grid_steps():
    state = engine.init(GridConfig(1, 1, {}))
    engine.step(state)
    assert state.tick == 1 and state.trace.total_spike_count == 0


def test_decoder_word_on_input_axons_at_tick_one(layouts):
    layout = layouts[Variant.XOR_INTEGRATED]
    ws = make_word_schedule(layout, ["10001100"])
    state = engine.init(layout.grid, ws.schedule)
    engine.step(state)
    labels = state.trace.labels_at(1, layout.roles["input"])
    assert {l for l in labels if l.startswith("r") and l.endswith("_v")} == {"r0_v", "r4_v", "r5_v"}


@pytest.mark.parametrize("kernel", kernels())
def test_register_persists_until_reset(kernel):
    frag = build_register(1)
    core, d = frag.inputs["D0"]
    _, r = frag.inputs["Reset"]
    sched = engine.InputSchedule([SpikeEvent(1, core, d), SpikeEvent(5, core, r)])
    state, trace = engine.run(engine.init(frag.to_grid(), sched), 8, kernel=kernel)
    assert trace.spike_ticks_of((0, 0), 0) == [1, 2, 3, 4]
    # Q plus D' for every held tick
    assert engine.spike_count(trace) == 8


@pytest.mark.parametrize("kernel", kernels())
def test_baseline_xor_three_inputs(kernel):
    frag = build_xor_baseline(4)
    events = [SpikeEvent(1, (0, 0), i) for i in (0, 2, 3)]
    _, trace = engine.run(engine.init(frag.to_grid(), engine.InputSchedule(events)), 3,
                          kernel=kernel)
    assert trace.labels_at(1, (0, 0)) == {"p1", "p2", "p3"}
    assert trace.labels_at(2, (1, 0)) == {"O"}
    assert trace.total_spike_count == 4


def test_run_zero_ticks_is_identity():
    frag = build_register(1)
    state = engine.init(frag.to_grid(), engine.InputSchedule([SpikeEvent(1, (0, 0), 0)]))
    engine.run(state, 3)
    before = state.copy()
    state, trace = engine.run(state, 3)
    assert trace == before.trace
    assert np.array_equal(state.potentials, before.potentials)
    with pytest.raises(ValueError):
        engine.run(state, 2)


def test_spike_count_filter_and_empty(dataset_runs, layouts):
    assert engine.spike_count(engine.TraceLog.empty()) == 0
    layout = layouts[Variant.XOR_INTEGRATED]
    trace = dataset_runs[Variant.XOR_INTEGRATED].trace
    per_role = [engine.spike_count(trace, [c]) for c in layout.roles.values()]
    assert sum(per_role) == trace.total_spike_count
    assert sum(trace.per_tick_counts().values()) == trace.total_spike_count


def test_kernels_agree_on_decoder(layouts, dataset):
    if len(kernels()) < 2:
        pytest.skip("compiled kernel not built")
    words = dataset[::17]
    for layout in layouts.values():
        a = decode_words(layout, words, kernel="python").trace
        b = decode_words(layout, words, kernel="cython").trace
        assert a == b


def _reference_trace(layout, words, order_seed=None, executor=None):
    ws = make_word_schedule(layout, words)
    state = engine.init(layout.grid, ws.schedule)
    coords = list(state.flat.coords)
    rng = random.Random(order_seed)
    for _ in range(ws.total_ticks):
        order = rng.sample(coords, len(coords)) if order_seed is not None else None
        engine.step_reference(state, order, executor)
    return state.trace


def test_determinism_under_parallel_evaluation(layouts):
    words = ["10001100", "11111111", "00000000"]
    for variant, layout in layouts.items():
        fast = decode_words(layout, words).trace
        assert _reference_trace(layout, words, order_seed=7) == fast
        with ThreadPoolExecutor(max_workers=4) as pool:
            assert _reference_trace(layout, words, executor=pool) == fast


def test_causality_no_same_tick_consumption():
    # a chain a -> b: b can only fire one tick after a
    axons = [AxonEntry(0, "in"), AxonEntry(0, "mid")]
    neurons = [lif((1,), dest=Destination((0, 0), 1), label="a"), lif((1,), label="b")]
    core = make_core(axons, neurons, [(0,), (1,)])
    sched = engine.InputSchedule([SpikeEvent(1, (0, 0), 0)])
    _, trace = engine.run(engine.init(GridConfig(1, 1, {(0, 0): core}), sched), 4)
    assert trace.spike_ticks_of((0, 0), 0) == [1]
    assert trace.spike_ticks_of((0, 0), 1) == [2]


@pytest.mark.parametrize("until", [1, 2, 3, 10, 50, 207, 300])
def test_conservation(layouts, until):
    layout = layouts[Variant.XOR_INTEGRATED]
    ws = make_word_schedule(layout, ["10001100"])
    state, trace = engine.run(engine.init(layout.grid, ws.schedule), until)
    # delivered to axons + delivered to host + still in flight
    assert state.produced_routed() == (state.delivered + state.host_delivered_count()
                                       + state.pending_count())
    assert state.pending_count() >= int(state.ring.sum())


def test_quiescence(layouts):
    for layout in layouts.values():
        _, trace = engine.run(engine.init(layout.grid), 500)
        assert trace.total_spike_count == 0
        assert trace.host_tick.size == 0


def test_run_in_chunks_equals_single_run(layouts):
    layout = layouts[Variant.BASELINE]
    ws = make_word_schedule(layout, ["10001100", "01001011"])
    _, whole = engine.run(engine.init(layout.grid, ws.schedule), ws.total_ticks)
    state = engine.init(layout.grid, ws.schedule)
    for t in range(1, ws.total_ticks + 1, 37):
        engine.run(state, min(t + 36, ws.total_ticks))
    assert state.trace == whole


def test_bulk_schedule_arrays():
    frag = build_register(2)
    grid = frag.to_grid()
    st = engine.init(grid, ext_tick=[1, 4], ext_axon=[0, 4])
    _, trace = engine.run(st, 6)
    assert trace.spike_ticks_of((0, 0), 0) == [1, 2, 3]
    with pytest.raises(ConfigError):
        engine.init(grid, ext_tick=[0], ext_axon=[0])
