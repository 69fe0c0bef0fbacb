"""Timing comparison of the numba and pure-numpy kernel paths.

Usage: python benchmarks/bench_kernels.py [--repeats 200]

The same comparison applies end to end: run the sweep CLI with
CUTNITSCHE_NUMBA=0 to time the fallback path.
"""

import argparse
import time

import numpy as np

from cutnitsche import kernels


def make_args(name, rng, nq=64, nd=9, ne=1024):
    pts = rng.uniform(-1.0, 1.0, (nq, 2))
    vals = rng.standard_normal((nq, nd))
    grads = rng.standard_normal((nq, nd, 2))
    w = rng.uniform(0.1, 1.0, nq)
    normals = rng.standard_normal((nq, 2))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return {
        "tabulate_p1": (pts,),
        "tabulate_q1": (pts,),
        "tabulate_q2": (pts,),
        "weighted_gram": (vals, w),
        "weighted_cross": (vals, rng.standard_normal((nq, nd)), w),
        "weighted_stiffness": (grads, w),
        "normal_derivatives": (grads, normals),
        "weighted_moments": (vals, w, rng.standard_normal(nq)),
        "batch_moments": (vals, rng.standard_normal((ne, nq))),
        "batch_field": (vals, rng.standard_normal((ne, nd))),
        "batch_gradient": (grads, rng.standard_normal((ne, nd))),
    }[name]


def time_call(fn, args, repeats):
    fn(*args)  # warm up (jit compile / cache touch)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    numpy_impls = kernels.numpy_impls()
    numba_impls = kernels.numba_impls()

    print(f"{'kernel':<20} {'numpy (us)':>12} {'numba (us)':>12} {'speedup':>9}")
    for name in numpy_impls:
        call_args = make_args(name, rng)
        t_np = time_call(numpy_impls[name], call_args, args.repeats)
        t_nb = time_call(numba_impls[name], call_args, args.repeats)
        print(f"{name:<20} {t_np * 1e6:>12.1f} {t_nb * 1e6:>12.1f} "
              f"{t_np / t_nb:>8.2f}x")


if __name__ == "__main__":
    main()
