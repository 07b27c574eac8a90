# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled Metropolis kernels.

Both functions consume pre-drawn proposal uniforms and ``log`` acceptance
uniforms, and evaluate the acceptance test with exactly the same operation
order as the numpy fallback, so the two backends produce identical chains.
"""

import numpy as np


def run_chains(
    const double[::1] energy,
    const long long[::1] offsets,
    const long long[::1] nbrs,
    const double[::1] logdeg,
    double beta,
    const long long[::1] starts,
    const double[:, ::1] prop_u,
    const double[:, ::1] logu,
):
    """Full state trajectories, shape ``(chains, steps + 1)``."""
    cdef Py_ssize_t T = starts.shape[0]
    cdef Py_ssize_t steps = prop_u.shape[1]
    cdef Py_ssize_t c, t
    cdef long long x, y, deg
    out_arr = np.empty((T, steps + 1), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    with nogil:
        for c in range(T):
            x = starts[c]
            out[c, 0] = x
            for t in range(steps):
                deg = offsets[x + 1] - offsets[x]
                y = nbrs[offsets[x] + <long long>(prop_u[c, t] * <double>deg)]
                if logu[c, t] < beta * (energy[y] - energy[x]) + logdeg[x] - logdeg[y]:
                    x = y
                out[c, t + 1] = x
    return out_arr


def hit_times(
    const double[::1] energy,
    const long long[::1] offsets,
    const long long[::1] nbrs,
    const double[::1] logdeg,
    double beta,
    const long long[::1] starts,
    const double[:, ::1] prop_u,
    const double[:, ::1] logu,
    const unsigned char[::1] target,
):
    """First ``t >= 0`` with ``target[X_t]``, or ``-1`` within the budget."""
    cdef Py_ssize_t T = starts.shape[0]
    cdef Py_ssize_t steps = prop_u.shape[1]
    cdef Py_ssize_t c, t
    cdef long long x, y, deg, hit
    out_arr = np.full(T, -1, dtype=np.int64)
    cdef long long[::1] out = out_arr
    with nogil:
        for c in range(T):
            x = starts[c]
            if target[x]:
                out[c] = 0
                continue
            hit = -1
            for t in range(steps):
                deg = offsets[x + 1] - offsets[x]
                y = nbrs[offsets[x] + <long long>(prop_u[c, t] * <double>deg)]
                if logu[c, t] < beta * (energy[y] - energy[x]) + logdeg[x] - logdeg[y]:
                    x = y
                    if target[x]:
                        hit = t + 1
                        break
            out[c] = hit
    return out_arr
