"""``neurogab`` command line.

Exit codes: 0 success, 1 verification mismatch, 2 input error.
"""

from __future__ import annotations

import argparse
import itertools
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, analytics, funclib
from .compiler import Variant, compile, decode_words, predicted_ticks
from .fabric import ConfigError
from .formats import (
    HEADER,
    FormatError,
    RunManifest,
    format_results,
    load_h,
    load_layout,
    load_words,
    read_trace,
    save_layout,
    write_trace,
)
from .gab import DecoderParams, bitstring, gab_decode, make_dataset

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def parse_range(text: str) -> list[int]:
    """``"288"``, ``"1,2,5"`` or inclusive ``"10:100:10"`` (items may be mixed)."""
    values: list[int] = []
    for item in text.split(","):
        item = item.strip()
        try:
            if ":" in item:
                parts = [int(p) for p in item.split(":")]
                if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] <= 0):
                    raise ValueError
                step = parts[2] if len(parts) == 3 else 1
                values.extend(range(parts[0], parts[1] + 1, step))
            else:
                values.append(int(item))
        except ValueError:
            raise InputError(f"bad range item {item!r}") from None
    if not values or min(values) < 0:
        raise InputError(f"range {text!r} is empty or negative")
    return values


def _params(args) -> DecoderParams:
    if args.max_iter < 1:
        raise InputError("--max-iter must be >= 1")
    return DecoderParams(args.max_iter)


def _timing(args) -> analytics.TimingModel:
    return analytics.TimingModel(tick_hz_override=args.tick_hz)


def cmd_compile(args) -> int:
    h = load_h(args.h_file)
    layout = compile(h, _params(args), args.variant)
    if args.out:
        save_layout(layout, args.out)
    lines = [f"variant {layout.variant.value}  max_iter {layout.max_iter}  "
             f"cores {len(layout.grid.cores)}  ticks/word {layout.ticks_per_word}",
             f"{'role':<18}{'coord':>8}{'axons':>7}{'neurons':>9}"]
    for role, c, n_ax, n_ne in layout.core_report():
        lines.append(f"{role:<18}{str(c):>8}{n_ax:>7}{n_ne:>9}")
    lines.append(f"xor neurons {len(layout.xor_neurons)}  "
                 f"i_max threshold {layout.iteration_threshold}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_decode(args) -> int:
    layout = load_layout(args.layout)
    words = load_words(args.words, layout.h.N)
    run = decode_words(layout, words, kernel=args.kernel)
    _emit(format_results(run.results), args.out)
    if args.trace:
        write_trace(run.trace, args.trace)
    return EXIT_OK


def _oracle_rows(h, words, params):
    rows = []
    for w in words:
        res = gab_decode(h, w, params)
        rows.append((bitstring(w) if not isinstance(w, str) else w,
                     bitstring(res.x_prime), res.converged, res.iterations_used))
    return rows


def cmd_oracle(args) -> int:
    h = load_h(args.h_file)
    words = load_words(args.words, h.N) if args.words else make_dataset(h)
    lines = [HEADER, "word,x_prime,status,iterations"]
    for w, x, conv, it in _oracle_rows(h, words, _params(args)):
        lines.append(f"{w},{x},{'converged' if conv else 'failed'},{it}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.manifest:
        m = RunManifest.load(args.manifest)
        h = m.validate()
        args.variant, args.max_iter = m.variant, m.max_iter
        words = load_words(m.schedule_file, h.N) if m.schedule_file else None
    else:
        if not args.h_file:
            raise InputError("verify needs an H file or --manifest")
        h = load_h(args.h_file)
        words = None
    if words is None:
        words = load_words(args.words, h.N) if args.words else make_dataset(h)
    params = _params(args)
    variant = Variant.parse(args.variant)
    layout = compile(h, params, variant)
    t0 = time.perf_counter()
    run = decode_words(layout, words, kernel=args.kernel)
    elapsed = time.perf_counter() - t0
    mismatches = 0
    for (w, x, conv, _), r in zip(_oracle_rows(h, words, params), run.results):
        if r.x_prime != x or r.converged != conv:
            mismatches += 1
            print(f"MISMATCH {w}: fabric {r.x_prime} converged={r.converged} "
                  f"tick={r.output_tick}; oracle {x} converged={conv}")
    predicted = predicted_ticks(variant, len(words), params.max_iter)
    ticks_ok = run.last_output_tick == predicted or (not words and run.total_ticks == predicted)
    if not ticks_ok:
        print(f"TICKS last host output at {run.last_output_tick}, predicted {predicted}")
    ok = mismatches == 0 and ticks_ok
    print(f"{'PASS' if ok else 'FAIL'} variant={variant.value} words={len(words)} "
          f"mismatches={mismatches} ticks={run.last_output_tick} predicted={predicted} "
          f"spikes={run.trace.total_spike_count} wall={elapsed:.2f}s")
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_sweep(args) -> int:
    energy = analytics.EnergyModel(power_overhead_ratio=args.power_ratio,
                                   energy_per_spike_joules=args.energy_per_spike)
    rows = analytics.sweep(parse_range(args.w_c), parse_range(args.max_iter_range),
                           energy, _timing(args))
    lines = [HEADER, "w_c,max_iter,energy_baseline_j,energy_xor_j,reduction_pct"]
    for r in rows:
        lines.append(f"{r.w_c},{r.max_iter},{r.energy_baseline_j:.6g},"
                     f"{r.energy_xor_j:.6g},{r.reduction_pct:.2f}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    trace = read_trace(args.trace)
    roles = {}
    if args.layout:
        roles = {c: r for r, c in load_layout(args.layout).roles.items()}
    per_core = Counter()
    for i, n in zip(*_unique(trace.spike_loc)):
        loc = trace.locations[i]
        per_core[roles.get(loc.core, f"{loc.core[0]},{loc.core[1]}")] += n
    total = trace.total_spike_count
    model = analytics.EnergyModel(energy_per_spike_joules=args.energy_per_spike)
    hz = analytics.tick_frequency(_timing(args))
    lines = [HEADER, f"ticks,{trace.end_tick}",
             f"seconds,{analytics.execution_time(trace.end_tick, hz):.2f}",
             f"tick_hz,{hz:.2f}",
             f"spikes,{total}",
             f"host_deliveries,{trace.host_tick.size}",
             f"spike_energy_j,{analytics.energy_spike_count(total, model):.6g}"]
    lines += [f"spikes[{k}],{per_core[k]}" for k in sorted(per_core)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _unique(ids):
    u, c = np.unique(ids, return_counts=True)
    return u.tolist(), c.tolist()


def cmd_funcs_test(args) -> int:
    failures = 0
    for name, (factory, ref) in funclib.reference_functions().items():
        frag = factory()
        bad = funclib.truth_table_mismatches(frag, ref)
        failures += len(bad)
        print(f"{'ok  ' if not bad else 'FAIL'} {name:<18} "
              f"{2 ** len(frag.data_ports)} patterns, {frag.n_neurons} neurons")
        for pattern, want, got in bad[:5]:
            print(f"     pattern {pattern}: want {want} got {got}")
    for n in range(2, 6):
        a, b = funclib.build_xor_baseline(n), funclib.build_xor_integrated(n)
        diff = [p for p in itertools.product((0, 1), repeat=n)
                if funclib.evaluate_combinational(a, p) != funclib.evaluate_combinational(b, p)]
        failures += len(diff)
        print(f"{'ok  ' if not diff else 'FAIL'} xor_cross{n:<9} baseline == integrated")
    states, bad = funclib.register_model_check(args.register_depth)
    failures += len(bad)
    print(f"{'ok  ' if not bad else 'FAIL'} register           "
          f"all schedules up to {args.register_depth} ticks, {states} states")
    return EXIT_OK if failures == 0 else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="neurogab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"neurogab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def decoder_opts(sp):
        sp.add_argument("--variant", choices=[v.value for v in Variant],
                        default=Variant.XOR_INTEGRATED.value)
        sp.add_argument("--max-iter", type=int, default=100)

    def model_opts(sp):
        sp.add_argument("--tick-hz", type=float, default=None,
                        help="override the derived tick frequency")
        sp.add_argument("--power-ratio", type=float, default=analytics.RATIO_5X5)
        sp.add_argument("--energy-per-spike", type=float,
                        default=analytics.ENERGY_PER_SPIKE_J)

    kernel = dict(choices=["auto", "cython", "python"], default=None)

    sp = sub.add_parser("compile", help="compile an H matrix to a decoder layout")
    sp.add_argument("h_file", help="H matrix file, or @example8")
    decoder_opts(sp)
    sp.add_argument("--out", help="layout JSON path")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("decode", help="run words through a compiled layout")
    sp.add_argument("layout")
    sp.add_argument("words")
    sp.add_argument("--out")
    sp.add_argument("--trace", help="also write the spike trace CSV")
    sp.add_argument("--kernel", **kernel)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("verify", help="fabric vs serial decoder on a dataset")
    sp.add_argument("h_file", nargs="?")
    decoder_opts(sp)
    sp.add_argument("--words", help="word file (default: codebook plus 1-bit flips)")
    sp.add_argument("--manifest", help="run manifest JSON")
    sp.add_argument("--kernel", **kernel)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("oracle", help="serial Gallager-B decode")
    sp.add_argument("h_file")
    sp.add_argument("--words")
    sp.add_argument("--max-iter", type=int, default=100)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("sweep", help="energy reduction table")
    sp.add_argument("--w-c", default="288")
    sp.add_argument("--max-iter", dest="max_iter_range", default="100")
    model_opts(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="spike and timing summary of a trace")
    sp.add_argument("trace")
    sp.add_argument("--layout", help="layout for per-role totals")
    model_opts(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("funcs-test", help="exhaustive truth tables for logic builders")
    sp.add_argument("--register-depth", type=int, default=10)
    sp.set_defaults(func=cmd_funcs_test)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FormatError, ConfigError, ValueError, OSError) as exc:
        print(f"neurogab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
