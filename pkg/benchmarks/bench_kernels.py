"""Compare the numba and numpy hierarchy kernels.

    python3 benchmarks/bench_kernels.py --n-max 32 --l-max 12 --points 256 --repeat 5

Both kernels get the same f2 jets (bounded beta family); the script checks
they agree and prints the best wall time of each.
"""

import argparse
import time

import numpy as np

from mfflow import _config, _kernels
from mfflow.families import BetaFlow
from mfflow.hierarchy import required_order


def make_input(n_max, l_max, points):
    fam = BetaFlow(0.5, 0.25, 20.0)
    L = required_order(n_max, l_max)
    return np.array([fam.jet(mu, L).derivs for mu in np.linspace(0.0, 20.0, points)], dtype=np.float64)


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=32)
    ap.add_argument("--l-max", type=int, default=12)
    ap.add_argument("--points", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    F2 = make_input(args.n_max, args.l_max, args.points)
    print(f"grid={args.points} n_max={args.n_max} order={F2.shape[1] - 1}")

    ref = _kernels.hierarchy_sweep_numpy(F2, args.n_max)
    t_np = best_time(lambda: _kernels.hierarchy_sweep_numpy(F2, args.n_max), args.repeat)
    print(f"numpy  {t_np * 1e3:9.2f} ms")

    if not _config.HAVE_NUMBA:
        print("numba  not installed")
        return
    if _config.DISABLE_NUMBA:
        print("numba  disabled by environment")
        return
    t0 = time.perf_counter()
    out = _kernels.hierarchy_sweep_numba(F2, args.n_max)
    print(f"numba  first call (compile) {time.perf_counter() - t0:.2f} s")
    t_nb = best_time(lambda: _kernels.hierarchy_sweep_numba(F2, args.n_max), args.repeat)
    ok = np.isfinite(ref)
    rel = np.max(np.abs(out[ok] - ref[ok]) / np.maximum(np.abs(ref[ok]), 1e-300))
    same_mask = np.array_equal(np.isfinite(out), ok)
    print(f"numba  {t_nb * 1e3:9.2f} ms  speedup x{t_np / t_nb:.1f}  max rel diff {rel:.1e}  same NaN mask {same_mask}")


if __name__ == "__main__":
    main()
