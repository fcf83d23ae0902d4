"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--B 1000] [--H 50] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from wcoda import _kernels


def make_inputs(B, H, K=6, n=120, A=111, seed=0):
    rng = np.random.default_rng(seed)
    point = rng.normal(size=(H, K))
    errors = rng.normal(scale=0.1, size=(H, n, K))
    err_idx = rng.integers(0, n - H, size=(B, H, K))
    resid = rng.normal(scale=0.01, size=(n, A))
    res_idx = rng.integers(0, n, size=(B, H))
    phi = rng.normal(size=(K, A)) / np.sqrt(A)
    log_alpha = -np.abs(rng.normal(size=A))
    return point, errors, err_idx, resid, res_idx, phi, log_alpha, 1e5


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--B", type=int, default=1000)
    ap.add_argument("--H", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = {"python": _kernels.python_impl}
    if _kernels.cython_impl is not None:
        backends["cython"] = _kernels.cython_impl
    else:
        print("compiled extension not built; timing the fallback only")

    paths_in = make_inputs(args.B, args.H)
    ages = np.arange(60, 110, 5, dtype=np.int64)
    mats = np.arange(5, 35, 5, dtype=np.int64)
    disc = np.exp(-0.03 * np.arange(1, args.H + 1))

    results = {}
    for name, impl in backends.items():
        paths = impl.assemble_paths(*paths_in)
        t_paths = min(timeit.repeat(lambda: impl.assemble_paths(*paths_in), number=1, repeat=args.repeat))
        t_price = min(
            timeit.repeat(lambda: impl.annuity_prices(paths, ages, mats, disc), number=1, repeat=args.repeat)
        )
        results[name] = (t_paths, t_price)
        print(f"{name:>7}: assemble_paths {t_paths * 1e3:9.2f} ms   annuity_prices {t_price * 1e3:9.2f} ms")

    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(f"speedup: assemble_paths x{py[0] / cy[0]:.1f}, annuity_prices x{py[1] / cy[1]:.1f}")


if __name__ == "__main__":
    main()
