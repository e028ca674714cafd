"""Time the numba and pure-numpy paths of each hot kernel on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both implementations are imported directly, so ``RIDGECUT_NUMBA`` does not
matter here. The first jit call (compilation) is excluded.
"""
import argparse
import time

import numpy as np

from ridgecut import kernels
from ridgecut._accel import HAS_NUMBA
from ridgecut.constructions import build_example
from ridgecut.newton import plateau_pyramid


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    body = build_example("cylinder", n=4096).body
    s = body.vertices @ np.array([1.0, 0.0, -1.0]) - 0.9
    yield "clip_loops (cylinder n=4096)", "clip_loops", (body.loop_ptr, body.loop_idx, s)
    yield "loop_vector_areas (cylinder n=4096)", "loop_vector_areas", (
        body.vertices, body.loop_ptr, body.loop_idx)
    u, _ = plateau_pyramid(2.0, n=1024)
    yield "grid_integrand (1024^2 pyramid)", "grid_integrand", (
        u.values, u.mask, u.hx, u.hy, u.M, 1e-9 * u.M)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba unavailable or disabled; timing the numpy path only")
    print(f"{'kernel':40s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}")
    for label, name, inputs in cases():
        np_fn = getattr(kernels, f"{name}_numpy")
        t_np = best_of(np_fn, inputs, args.repeat)
        if HAS_NUMBA:
            jit_fn = getattr(kernels, f"{name}_jit")
            jit_fn(*inputs)  # compile
            t_jit = best_of(jit_fn, inputs, args.repeat)
            print(f"{label:40s} {1e3 * t_jit:11.3f} {1e3 * t_np:11.3f} {t_np / t_jit:8.1f}")
        else:
            print(f"{label:40s} {'-':>11s} {1e3 * t_np:11.3f} {'-':>8s}")


if __name__ == "__main__":
    main()
