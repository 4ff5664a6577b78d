"""Time the compiled and numpy kernel blocks on the same inputs.

    python3 benchmarks/bench_kernels.py [--sizes 200 800 2000] [--repeat 5]
"""

import argparse
import importlib
import timeit

import numpy as np


def _inputs(n, rng):
    x = rng.normal(size=(n, 2))
    y = rng.normal(size=(n, 2)) + 5.0
    a, b = rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n)
    tx = np.stack([np.cos(a), np.sin(a)], axis=1)
    ty = np.stack([np.cos(b), np.sin(b)], axis=1)
    return x, tx, y, ty


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 800, 2000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    py = importlib.import_module("stokes_corners._kernels_py")
    try:
        ext = importlib.import_module("stokes_corners._kernels_ext")
    except ImportError:
        ext = None
        print("compiled extension not built; timing the numpy backend only")

    rng = np.random.default_rng(0)
    print(f"{'block':>10} {'n':>6} {'numpy [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for n in args.sizes:
        x, tx, y, ty = _inputs(n, rng)
        for name, call in (
            ("k_block", lambda m: m.k_block(x, tx, y, ty)),
            ("dlp_block", lambda m: m.dlp_block(x[: n // 10 or 1], y, ty)),
        ):
            t_py = min(timeit.repeat(lambda: call(py), number=1, repeat=args.repeat)) * 1e3
            if ext is None:
                print(f"{name:>10} {n:>6} {t_py:12.2f} {'-':>12} {'-':>8} {'-':>10}")
                continue
            t_ext = min(timeit.repeat(lambda: call(ext), number=1, repeat=args.repeat)) * 1e3
            diff = float(np.max(np.abs(call(py) - call(ext))))
            print(f"{name:>10} {n:>6} {t_py:12.2f} {t_ext:12.2f} {t_py / t_ext:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
