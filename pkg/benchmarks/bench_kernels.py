"""Time the numba and pure-numpy kernel paths side by side.

    python3 benchmarks/bench_kernels.py [--n 65536] [--p 12] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from dirate import _kernels
from dirate.model import reference_model


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=65536, help="series length")
    ap.add_argument("--p", type=int, default=12, help="lag order for the block covariance")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    model = reference_model("W2")
    noise = rng.standard_normal((args.n, model.n_w))
    init = rng.standard_normal((model.order, model.n_w))
    data = rng.standard_normal((args.n, model.n_w))

    cases = [
        ("var_recursion", _kernels.var_recursion_numpy, _kernels.var_recursion_numba,
         (model.coeffs, init, noise)),
        ("lagged_block_cov", _kernels.lagged_block_cov_numpy, _kernels.lagged_block_cov_numba,
         (data, args.p)),
    ]
    print(f"N = {args.n}, p = {args.p}, numba available: {_kernels.HAVE_NUMBA}")
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, np_fn, nb_fn, fargs in cases:
        t_np = best_of(lambda: np_fn(*fargs), args.repeat)
        if nb_fn is None:
            print(f"{name:<18}{t_np:>12.4f}{'-':>12}{'-':>10}{'-':>14}")
            continue
        nb_fn(*fargs)  # compile outside the timed region
        t_nb = best_of(lambda: nb_fn(*fargs), args.repeat)
        diff = float(np.abs(np_fn(*fargs) - nb_fn(*fargs)).max())
        print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x{diff:>14.2e}")


if __name__ == "__main__":
    main()
