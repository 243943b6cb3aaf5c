"""Kernel backend selection: numba-compiled hot loops with a pure-numpy fallback.

Set NCPHASE_DISABLE_NUMBA=1 to force the numpy path.  Both paths run the
same code, so results are bitwise identical; only the speed differs.
"""
import os

import numpy as np

_DISABLE = os.environ.get("NCPHASE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLE:
        raise ImportError("numba disabled by NCPHASE_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        # identity decorator, tolerant of both @njit and @njit(...) forms
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def _rk4_core(gen, drift, z0, dt, steps):
    # classical RK4 on the affine system dz/dt = gen @ z + drift
    n = z0.shape[0]
    out = np.empty((steps + 1, n))
    out[0] = z0
    z = z0.copy()
    for i in range(steps):
        k1 = np.dot(gen, z) + drift
        k2 = np.dot(gen, z + 0.5 * dt * k1) + drift
        k3 = np.dot(gen, z + 0.5 * dt * k2) + drift
        k4 = np.dot(gen, z + dt * k3) + drift
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = z
    return out


def _residual3d_core(x):
    # x packs (f_tx, f_ty, f_tz, f_t1, f_t2, f_t3,
    #          f_ex, f_ey, f_ez, f_e1, f_e2, f_e3,
    #          t1, t2, t3, e1, e2, e3)
    F = np.empty((3, 3))
    F[0, 0] = x[0]
    F[0, 1] = x[3] - x[12]
    F[0, 2] = x[4] - x[13]
    F[1, 0] = x[3] + x[12]
    F[1, 1] = x[1]
    F[1, 2] = x[5] - x[14]
    F[2, 0] = x[4] + x[13]
    F[2, 1] = x[5] + x[14]
    F[2, 2] = x[2]
    G = np.empty((3, 3))
    G[0, 0] = x[6]
    G[0, 1] = x[9] - x[15]
    G[0, 2] = x[10] - x[16]
    G[1, 0] = x[9] + x[15]
    G[1, 1] = x[7]
    G[1, 2] = x[11] - x[17]
    G[2, 0] = x[10] + x[16]
    G[2, 1] = x[11] + x[17]
    G[2, 2] = x[8]
    r = np.empty(9)
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += F[i, k] * G[k, j]
            r[3 * i + j] = s
    return r


rk4_trajectory_numpy = _rk4_core
residual3d_numpy = _residual3d_core

if HAS_NUMBA:
    rk4_trajectory_numba = njit(cache=True)(_rk4_core)
    residual3d_numba = njit(cache=True)(_residual3d_core)
    rk4_trajectory = rk4_trajectory_numba
    residual3d = residual3d_numba
else:
    rk4_trajectory_numba = None
    residual3d_numba = None
    rk4_trajectory = rk4_trajectory_numpy
    residual3d = residual3d_numpy


def backend_name():
    return "numba" if HAS_NUMBA else "numpy"
