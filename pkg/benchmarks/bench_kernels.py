"""Compare the compiled quantization kernels against the numpy fallback.

Runs the fused quantize-dequantize over a few matrix sizes, checks that
both backends produce bit-identical results, and prints a timing table.

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from rotquant import _kernels_np

try:
    from rotquant import _kernels
except ImportError:
    _kernels = None

SHAPES = [(512, 256), (2048, 256), (2048, 1024), (8192, 1024)]


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--bits", type=int, default=4)
    args = parser.parse_args()

    if _kernels is None:
        print("compiled extension not built; benchmarking numpy fallback only")

    rng = np.random.default_rng(0)
    print(f"{'shape':>12}  {'numpy':>10}  {'cython':>10}  {'speedup':>8}")
    for rows, cols in SHAPES:
        x = rng.standard_normal((rows, cols))
        x[rng.integers(0, rows, 3)] *= 100.0
        t_np = time_call(
            _kernels_np.quantize_dequantize, x, args.bits, 1.0, 1.0, repeats=args.repeats
        )
        if _kernels is None:
            print(f"{rows}x{cols:>6}  {t_np * 1e3:9.2f}ms  {'-':>10}  {'-':>8}")
            continue
        t_cy = time_call(
            _kernels.quantize_dequantize, x, args.bits, 1.0, 1.0, repeats=args.repeats
        )
        eta_np = _kernels_np.quantize_dequantize(x, args.bits, 1.0, 1.0)
        eta_cy = _kernels.quantize_dequantize(x, args.bits, 1.0, 1.0)
        if not np.array_equal(eta_np, eta_cy):
            raise SystemExit(f"backends disagree on {rows}x{cols}")
        print(
            f"{rows}x{cols:>6}  {t_np * 1e3:9.2f}ms  {t_cy * 1e3:9.2f}ms  "
            f"{t_np / t_cy:7.2f}x"
        )
    if _kernels is not None:
        print("backends bit-identical on all shapes")


if __name__ == "__main__":
    main()
