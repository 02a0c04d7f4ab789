#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Shapes mirror a real training batch: 512 decisions, pools packed to ~2.6k
unique-card rows, a 200-card vocabulary, 64-wide layers.

    python3 benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from draftrank.numerics import kernels_py as pyk

try:
    from draftrank.numerics import _ckernels as ck
except ImportError:
    ck = None


def timeit(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    rows = rng.normal(size=(2600, 64))
    dy_rows = rng.normal(size=(2600, 64))
    gain, bias = rng.normal(size=64), rng.normal(size=64)
    counts = rng.integers(1, 45, size=512).astype(np.int64)
    packed = rng.normal(size=(int(counts.sum()), 64))
    dy_seg = rng.normal(size=(512, 64))
    sims = rng.uniform(-1, 1, size=(512, 200))
    mask = np.full((512, 200), -1, dtype=np.int8)
    for i in range(512):
        cols = rng.choice(200, size=15, replace=False)
        mask[i, cols] = 0
        mask[i, cols[0]] = 1
    _, probs = pyk.masked_ce_fwd(sims, mask, 1 / 0.07)
    drow = rng.normal(size=512)
    pool3d = rng.normal(size=(512, 45, 16))
    dy_pool = rng.normal(size=(512, 16))
    return [
        ("elu_fwd", (rows,)),
        ("elu_bwd", (rows, dy_rows)),
        ("layernorm_fwd", (rows, gain, bias)),
        ("layernorm_bwd", (rows, gain, bias, dy_rows)),
        ("l2norm_fwd", (rows,)),
        ("l2norm_bwd", (rows, dy_rows)),
        ("masked_mean_fwd", (pool3d, counts)),
        ("masked_mean_bwd", (counts, 45, dy_pool)),
        ("segment_mean_fwd", (packed, counts)),
        ("segment_mean_bwd", (counts, dy_seg)),
        ("masked_ce_fwd", (sims, mask, 1 / 0.07)),
        ("masked_ce_bwd", (probs, mask, 1 / 0.07, drow)),
    ]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    if ck is None:
        print("compiled kernels not built; run pip install -e . first")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for name, call_args in cases(rng):
        t_py = timeit(getattr(pyk, name), call_args, args.repeats)
        t_c = timeit(getattr(ck, name), call_args, args.repeats)
        print(f"{name:<18} {t_py * 1e6:>8.0f}us {t_c * 1e6:>8.0f}us {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
