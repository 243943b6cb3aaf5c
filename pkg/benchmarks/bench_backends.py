"""Timing comparison of the compiled kernels against the pure-numpy path.

Run as `python3 benchmarks/bench_backends.py`.  The same comparison is
available without numba installed by setting NCPHASE_DISABLE_NUMBA=1,
in which case both columns time the interpreted path.
"""
import time

import numpy as np

from ncphase import backend
from ncphase.nc3d import generate_feasible_3d, pack, solve_3d, unpack


def time_call(fn, *args, repeat=5, inner=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_rk4():
    rng = np.random.default_rng(1)
    sym = rng.uniform(-1.0, 1.0, (4, 4))
    J = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    gen = 0.05 * (J @ (sym + sym.T))
    drift = np.zeros(4)
    z0 = rng.uniform(-1.0, 1.0, 4)
    steps = 200_000
    args = (gen, drift, z0, 1e-4, steps)

    backend.rk4_trajectory(*args)  # compile before timing
    t_fast = time_call(backend.rk4_trajectory, *args)
    t_ref = time_call(backend.rk4_trajectory_numpy, *args)
    check = np.array_equal(backend.rk4_trajectory(*args),
                           backend.rk4_trajectory_numpy(*args))
    return ("rk4_trajectory", steps, t_fast, t_ref, check)


def bench_residual():
    rng = np.random.default_rng(2)
    xs = rng.uniform(-2.0, 2.0, (20_000, 18))

    def sweep(fn):
        acc = 0.0
        for x in xs:
            acc += fn(x)[0]
        return acc

    backend.residual3d(xs[0])
    t_fast = time_call(sweep, backend.residual3d, repeat=3)
    t_ref = time_call(sweep, backend.residual3d_numpy, repeat=3)
    check = np.array_equal(backend.residual3d(xs[0]), backend.residual3d_numpy(xs[0]))
    return ("residual3d x20k", len(xs), t_fast, t_ref, check)


def bench_solver():
    # end-to-end effect on the Newton loop, which calls the residual
    # kernel ~200 times per solve through the finite-difference Jacobian
    rng = np.random.default_rng(3)
    starts = []
    for seed in range(50):
        x = pack(generate_feasible_3d(seed))
        x[6:12] += 1e-3 * rng.standard_normal(6)
        starts.append(unpack(x))

    def solve_all():
        for p in starts:
            solve_3d(p, frozen=["theta", "eta"], tol=1e-10, max_iter=20)

    solve_all()
    t = time_call(solve_all, repeat=3)
    return ("solve_3d x50", 50, t, None, True)


def main():
    print(f"active backend: {backend.backend_name()}")
    rows = [bench_rk4(), bench_residual(), bench_solver()]
    print(f"{'kernel':<18} {'n':>8} {'active':>12} {'numpy':>12} {'speedup':>9}  agree")
    for name, n, t_fast, t_ref, check in rows:
        ref = f"{t_ref * 1e3:10.2f}ms" if t_ref is not None else f"{'-':>12}"
        ratio = f"{t_ref / t_fast:8.1f}x" if t_ref else f"{'-':>9}"
        print(f"{name:<18} {n:>8} {t_fast * 1e3:10.2f}ms {ref} {ratio}  {check}")


if __name__ == "__main__":
    main()
