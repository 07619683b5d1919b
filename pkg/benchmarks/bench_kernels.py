"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from pbdlearn import _kernels_py
from pbdlearn.cover import CoverConfig, build_cover

try:
    from pbdlearn import _kernels as _compiled
except ImportError:
    _compiled = None


def cases():
    rng = np.random.default_rng(0)
    cover = build_cover(CoverConfig(0.5, 40, k=2))
    P, C = cover.pmfs, cover.cdfs
    lo, hi = cover.support_bounds
    ref = P[len(P) // 2]
    counts = np.bincount(rng.integers(0, 41, 5000), minlength=41).astype(np.float64)
    p = rng.uniform(size=2000)
    return {
        "pbd_dp(n=2000)": lambda k: k.pbd_dp(p),
        f"delta_statistics({len(P)} rows)": lambda k: k.delta_statistics(P, lo, hi, ref),
        f"max_cdf_gaps({len(P)} rows)": lambda k: k.max_cdf_gaps(C, np.cumsum(ref)),
        f"tv_to_ref({len(P)} rows)": lambda k: k.tv_to_ref(P, ref),
        f"competitions_vs({len(P)} rows)": lambda k: k.competitions_vs(P, ref, counts, 5000, 0.05),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':36s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, fn in cases().items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _compiled is None:
            print(f"{name:36s} {t_py:10.3f} {'n/a':>12s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:36s} {t_py:10.3f} {t_c:12.3f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
