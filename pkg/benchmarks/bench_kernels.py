"""Compare the compiled and numpy tick kernels on the 288-word decoder runs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--max-iter 100]
"""

import argparse
import time

from neurogab import compile, make_dataset, make_example8
from neurogab.compiler import Variant, decode_words
from neurogab.engine import _select_kernel
from neurogab.gab import DecoderParams


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--max-iter", type=int, default=100)
    args = ap.parse_args()

    h = make_example8()
    words = make_dataset(h)
    try:
        _select_kernel("cython")
        kernels = ["cython", "python"]
    except ImportError:
        print("compiled kernel not built; timing the numpy kernel only")
        kernels = ["python"]

    print(f"{'variant':<10}{'kernel':<8}{'ticks':>8}{'spikes':>10}{'seconds':>9}{'Mticks/s':>10}")
    for variant in Variant:
        layout = compile(h, DecoderParams(args.max_iter), variant)
        traces = {}
        for k in kernels:
            secs, run = best_of(lambda: decode_words(layout, words, kernel=k), args.repeat)
            traces[k] = run.trace
            print(f"{variant.value:<10}{k:<8}{run.total_ticks:>8}"
                  f"{run.trace.total_spike_count:>10}{secs:>9.3f}"
                  f"{run.total_ticks / secs / 1e6:>10.3f}")
        if len(traces) == 2:
            same = traces["cython"] == traces["python"]
            print(f"{'':<10}traces identical: {same}")


if __name__ == "__main__":
    main()
