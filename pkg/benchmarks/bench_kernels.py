"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py            # full sizes
    python3 benchmarks/bench_kernels.py --quick    # small smoke run

Each case is run once to trigger compilation, then timed as the best of
``--repeat`` runs. Results from both paths are checked for agreement.
"""
from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from commitplan import kernels
from commitplan._accel import HAS_NUMBA


def cases(n, m):
    rng = np.random.default_rng(0)
    values = rng.gamma(4.0, 20.0, n)
    levels = np.linspace(values.min(), values.max(), m)
    varying = values * rng.uniform(0.8, 1.2, n)
    desired = np.round(values / 10)
    return {
        f"hinge_areas n={n}": lambda u: kernels.hinge_areas(values, 80.0, use_numba=u),
        f"sweep_hinge_areas n={n} m={m}": lambda u: kernels.sweep_hinge_areas(values, levels, use_numba=u),
        f"varying_hinge_areas n={n}": lambda u: kernels.varying_hinge_areas(values, varying, use_numba=u),
        f"hold_resizes n={n} gap=5": lambda u: kernels.hold_resizes(desired, 5, use_numba=u),
        f"ahead_quantile n={n} w=15": lambda u: kernels.ahead_quantile(values, 15, 11, use_numba=u),
    }


def _agree(a, b):
    a, b = np.atleast_1d(np.asarray(a, dtype=object)), np.atleast_1d(np.asarray(b, dtype=object))
    return all(np.allclose(np.asarray(x, float), np.asarray(y, float), rtol=1e-9) for x, y in zip(a, b))


def run(n, m, repeat):
    rows = []
    for name, fn in cases(n, m).items():
        ref = fn(False)
        t_np = min(timeit.repeat(lambda: fn(False), number=1, repeat=repeat))
        if HAS_NUMBA:
            got = fn(True)  # compile
            if not _agree(got, ref):
                raise SystemExit(f"{name}: numba and numpy results differ")
            t_nb = min(timeit.repeat(lambda: fn(True), number=1, repeat=repeat))
        else:
            t_nb = float("nan")
        rows.append((name, t_np, t_nb))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--quick", action="store_true", help="small sizes, for smoke tests")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    n, m = (2_000, 50) if args.quick else (26_208, 1_000)  # three years of hours
    rows = run(n, m, 2 if args.quick else args.repeat)
    print(f"{'kernel':<40}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, t_np, t_nb in rows:
        print(f"{name:<40}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")
    return rows


if __name__ == "__main__":
    main()
    sys.exit(0)
