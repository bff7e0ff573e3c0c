"""Throughput comparison of the compiled and pure-numpy conv kernels.

Times each primitive at shapes drawn from the audio model's layers and
prints a table with the speedup of the compiled backend. Also verifies
on every case that both backends agree bit for bit, since the point of
having two is that they are interchangeable.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from weldwatch.kernels import available_backends, get_backend

# (label, primitive, shapes): a/w for the forward pair, g/x for the
# weight gradient. Channel counts mirror the audio model's outer and
# inner layers at two widths.
CASES = [
    ("conv in 513x64 T128", "correlate_valid", (8, 513, 128), (64, 513, 3)),
    ("conv mid 64x64 T128", "correlate_valid", (8, 64, 128), (64, 64, 3)),
    ("conv in 2049x128 T32", "correlate_valid", (4, 2049, 32), (128, 2049, 3)),
    ("scatter 48x64 T118", "scatter_full", (8, 48, 118), (48, 64, 3)),
    ("scatter 64x513 T126", "scatter_full", (8, 64, 126), (64, 513, 3)),
    ("wgrad 64x513 T128", "weight_grad", (8, 64, 126), (8, 513, 128)),
    ("wgrad 64x64 T128", "weight_grad", (8, 64, 126), (8, 64, 128)),
]


def flops(primitive, a_shape, w_shape):
    """Multiply-add count, times two for FLOPs."""
    if primitive == "correlate_valid":
        nb, nq, nt = a_shape
        p, _, k = w_shape
        return 2 * nb * nq * p * k * (nt - k + 1)
    if primitive == "scatter_full":
        nb, nq, nt = a_shape
        _, p, k = w_shape
        return 2 * nb * nq * p * k * nt
    nb, p, ntg = a_shape
    _, nq, _ = w_shape
    k = w_shape[2] - ntg + 1
    return 2 * nb * p * nq * k * ntg


def time_case(fn, a, w, repeats):
    fn(a, w)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(a, w)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled extension not built; timing the fallback only")

    rng = np.random.default_rng(0)
    header = f"{'case':<24}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, primitive, a_shape, w_shape in CASES:
        a = rng.standard_normal(a_shape)
        w = rng.standard_normal(w_shape)
        work = flops(primitive, a_shape, w_shape)
        row = f"{label:<24}"
        times = {}
        outputs = {}
        for name in backends:
            fn = getattr(get_backend(name), primitive)
            times[name] = time_case(fn, a, w, args.repeats)
            outputs[name] = fn(a, w)
            row += f"{work / times[name] / 1e9:>11.2f} GF"
        if len(backends) == 2:
            if not np.array_equal(outputs["cython"], outputs["python"]):
                raise AssertionError(f"{label}: backends disagree")
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
