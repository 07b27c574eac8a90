"""Numpy fallback for the Metropolis kernels, vectorized across chains.

Mirrors ``_ckernels`` operation for operation; see ``run_chains`` there.
"""

from __future__ import annotations

import numpy as np


def _step(x, energy, offsets, nbrs, logdeg, beta, u, lu):
    deg = offsets[x + 1] - offsets[x]
    y = nbrs[offsets[x] + (u * deg.astype(np.float64)).astype(np.int64)]
    accept = lu < beta * (energy[y] - energy[x]) + logdeg[x] - logdeg[y]
    return np.where(accept, y, x)


def run_chains(energy, offsets, nbrs, logdeg, beta, starts, prop_u, logu):
    T, steps = prop_u.shape
    out = np.empty((T, steps + 1), dtype=np.int64)
    x = np.asarray(starts, dtype=np.int64).copy()
    out[:, 0] = x
    for t in range(steps):
        x = _step(x, energy, offsets, nbrs, logdeg, beta, prop_u[:, t], logu[:, t])
        out[:, t + 1] = x
    return out


def hit_times(energy, offsets, nbrs, logdeg, beta, starts, prop_u, logu, target):
    T, steps = prop_u.shape
    target = np.asarray(target, dtype=bool)
    x = np.asarray(starts, dtype=np.int64).copy()
    out = np.where(target[x], 0, -1).astype(np.int64)
    alive = np.nonzero(out < 0)[0]
    for t in range(steps):
        if len(alive) == 0:
            break
        xa = _step(x[alive], energy, offsets, nbrs, logdeg, beta, prop_u[alive, t], logu[alive, t])
        x[alive] = xa
        hit = target[xa]
        out[alive[hit]] = t + 1
        alive = alive[~hit]
    return out
