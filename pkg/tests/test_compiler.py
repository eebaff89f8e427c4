import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from neurogab.compiler import (
    Variant,
    compile,
    decode_words,
    iteration_threshold,
    make_word_schedule,
    predicted_ticks,
)
from neurogab.fabric import CapacityError, ConfigError, OpSelect, validate_grid
from neurogab.gab import DecoderParams, HMatrix, bitstring, gab_decode, syndrome

XOR, BASE = Variant.XOR_INTEGRATED, Variant.BASELINE


def oracle_mismatches(H, words, run, max_iter):
    bad = []
    for w, r in zip(words, run.results):
        o = gab_decode(H, w, DecoderParams(max_iter))
        if r.x_prime != bitstring(o.x_prime) or r.converged != o.converged:
            bad.append((w, r, o))
    return bad


def test_core_counts(layouts):
    assert len(layouts[XOR].grid.cores) == 8
    assert len(layouts[BASE].grid.cores) == 9
    report = {role: (a, n) for role, _, a, n in layouts[XOR].core_report()}
    assert report["input"][1] == 20
    assert report["vnu"] == (27, 26)
    assert report["cnu"] == (17, 17)


def test_xor_neuron_totals(layouts):
    xor_layout = layouts[XOR]
    assert len(xor_layout.xor_neurons) == 20
    for c, i in xor_layout.xor_neurons:
        assert xor_layout.grid.cores[c].neurons[i].op_select is OpSelect.XOR
    base = layouts[BASE]
    assert len(base.xor_neurons) == 84
    assert all(base.grid.cores[c].neurons[i].op_select is OpSelect.LIF
               for c, i in base.xor_neurons)
    assert not any(n.op_select is OpSelect.XOR
                   for core in base.grid.cores.values() for n in core.neurons)


def test_iteration_threshold():
    assert iteration_threshold(100, XOR) == 202
    assert iteration_threshold(1, XOR) == 4
    assert iteration_threshold(DecoderParams(3), BASE) == 12
    with pytest.raises(ValueError):
        iteration_threshold(0, XOR)


def test_predicted_ticks():
    assert predicted_ticks(BASE, 288, 100) == 87556
    assert predicted_ticks(XOR, 288, 100) == 59042
    assert predicted_ticks(XOR, 0, 7) == 2
    assert predicted_ticks(BASE, 0, 7) == 4


def test_baseline_three_iterations_one_word(H):
    run = decode_words(compile(H, DecoderParams(3), BASE), ["11111111"])
    assert run.last_output_tick == 17 == predicted_ticks(BASE, 1, 3)


def test_schedule_spans(layouts, dataset):
    assert make_word_schedule(layouts[XOR], ["10001100"]).total_ticks == 207
    assert make_word_schedule(layouts[XOR], dataset).total_ticks == 59042
    assert make_word_schedule(layouts[XOR], []).total_ticks == 2
    assert make_word_schedule(layouts[BASE], []).total_ticks == 4
    with pytest.raises(ValueError):
        make_word_schedule(layouts[XOR], ["101"])


def test_windows_tile_the_run(layouts, dataset):
    for layout in layouts.values():
        ws = make_word_schedule(layout, dataset[:5])
        for (lo, hi), (lo2, _) in zip(ws.windows, ws.windows[1:]):
            assert lo2 == hi + 1
        assert ws.windows[-1][1] == ws.total_ticks


def test_running_example_alignment(layouts):
    layout = layouts[XOR]
    run = decode_words(layout, ["10001100"])
    tr, roles = run.trace, layout.roles
    assert tr.labels_at(2, roles["vnu"]) == {
        "v0c1", "v0c3", "v4c0", "v4c3", "v5c1", "v5c2", "x'0", "x'4", "x'5", "en_c", "en_p"}
    assert {l for l in tr.labels_at(3, roles["parity"]) if l.startswith("s")} == {"s0", "s2"}
    assert [t for t in range(1, 12) if "zero" in tr.labels_at(t, roles["syndrome"])][0] == 6
    x4 = "".join("1" if f"x'{n}" in tr.labels_at(4, roles["vnu"]) else "0" for n in range(8))
    assert x4 == "10001101"
    assert run.results[0].x_prime == "10001101" and run.results[0].converged


@pytest.mark.parametrize("variant", list(Variant))
def test_oracle_equivalence_dataset(H, dataset, dataset_runs, variant):
    run = dataset_runs[variant]
    assert oracle_mismatches(H, dataset, run, 100) == []
    assert run.last_output_tick == predicted_ticks(variant, 288, 100)
    assert all(r.output_tick is not None for r in run.results)


@pytest.mark.parametrize("variant,w_c,max_iter",
                         list(itertools.product(Variant, (1, 2, 5), (1, 2, 3, 10))))
def test_simulated_equals_predicted(H, dataset, variant, w_c, max_iter):
    words = random.Random(w_c * 100 + max_iter).sample(dataset, w_c)
    run = decode_words(compile(H, DecoderParams(max_iter), variant), words)
    assert run.last_output_tick == predicted_ticks(variant, w_c, max_iter)
    assert oracle_mismatches(H, words, run, max_iter) == []


def test_fixed_point_on_fabric(H, layouts, dataset_runs):
    # every in-window emission after the first repeats the same word
    for variant, run in dataset_runs.items():
        layout = layouts[variant]
        by_tick = {}
        for t, loc in run.trace.host_deliveries():
            by_tick.setdefault(t, set()).add(loc.label)
        for res, (lo, hi) in zip(run.results[:40], run.schedule.windows[:40]):
            emitted = [labels for t, labels in sorted(by_tick.items())
                       if lo <= t <= hi and "done" in labels]
            words = {"".join("1" if f"x'{n}" in s else "0" for n in range(8)) for s in emitted}
            assert words == {res.x_prime}
            # decision k = 0 is the received word; once converged at k, every
            # later decision up to max_iter is emitted again unchanged
            if res.converged:
                first = 0 if not syndrome(H, res.word).any() else \
                    gab_decode(H, res.word, layout.params).iterations_used
                expected = layout.max_iter + 1 - first
            else:
                expected = 1
            assert len(emitted) == expected


def _regular_h(rng, n, d_v, d_c):
    m = n * d_v // d_c
    while True:
        stubs = rng.permutation(np.repeat(np.arange(n), d_v))
        rows = [stubs[i * d_c:(i + 1) * d_c] for i in range(m)]
        if all(len(set(r)) == d_c for r in rows):
            h = np.zeros((m, n), dtype=np.uint8)
            for i, r in enumerate(rows):
                h[i, r] = 1
            return HMatrix(h)


@pytest.mark.parametrize("shape", [(6, 2, 3), (12, 3, 4), (10, 3, 5), (10, 4, 5), (9, 2, 3)])
@pytest.mark.parametrize("variant", list(Variant))
def test_general_codes_match_oracle(shape, variant):
    rng = np.random.default_rng(sum(shape))
    H = _regular_h(rng, *shape)
    layout = compile(H, DecoderParams(6), variant)
    assert validate_grid(layout.grid) == []
    words = [tuple(int(b) for b in rng.integers(0, 2, H.N)) for _ in range(25)]
    words += [tuple(0 for _ in range(H.N))]
    run = decode_words(layout, words)
    assert oracle_mismatches(H, words, run, 6) == []
    assert run.last_output_tick == predicted_ticks(variant, len(words), 6)


def test_irregular_rejected():
    h = HMatrix.from_rows(["1100", "0111"])
    with pytest.raises(ConfigError, match="regular"):
        compile(h)


def test_capacity_error_names_core():
    rng = np.random.default_rng(0)
    H = _regular_h(rng, 100, 2, 4)
    with pytest.raises(CapacityError, match="vnu"):
        compile(H)


def test_baseline_second_layer_capacity():
    # 48 edges x 5 counting axons plus 8 x 6 parity axons overflow the extra core
    H = _regular_h(np.random.default_rng(3), 12, 4, 6)
    compile(H, DecoderParams(5), XOR)
    with pytest.raises(CapacityError, match="baseline_xor"):
        compile(H, DecoderParams(5), BASE)


def test_non_default_thresholds_rejected(H):
    with pytest.raises(ConfigError):
        compile(H, DecoderParams(10, tie_threshold=Fraction(1, 2)))
    # explicitly passing the defaults is fine
    compile(H, DecoderParams(10, tie_threshold=Fraction(1), decision_threshold=Fraction(3, 2)))


def test_variant_parse():
    assert Variant.parse("xor") is XOR
    assert Variant.parse("BASELINE") is BASE
    assert Variant.parse("xor_integrated") is XOR
    with pytest.raises(ValueError):
        Variant.parse("fast")


def test_port_map(layouts):
    layout = layouts[XOR]
    assert {f"r{n}" for n in range(8)} <= set(layout.port_map)
    for key in ("en", "rst_in", "done", "zero"):
        assert key in layout.port_map
    core, idx = layout.port_map["done"]
    assert layout.grid.cores[core].neurons[idx].destination.is_host
