"""Finite, transitive-symmetric state spaces on the unit sphere."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..priors import OverlapDistribution, exact_distribution

ENUMERABLE_MAX = 10**6
NEIGHBOUR_MAX = 20_000
_DIST_TOL = 1e-12


@dataclass(frozen=True)
class NeighbourTable:
    """CSR adjacency of the metric ball ``0 < ||v - v'|| <= radius``."""

    radius: float
    offsets: np.ndarray
    indices: np.ndarray

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def of(self, i: int) -> np.ndarray:
        return self.indices[self.offsets[i] : self.offsets[i + 1]]


class StateSpace:
    """Base class: subclasses provide ``size``, ``dim`` and ``_build_states``."""

    nonnegative_overlaps: bool = False

    @property
    def size(self) -> int:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def enumerable(self) -> bool:
        return self.size <= ENUMERABLE_MAX

    def _build_states(self) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def states(self) -> np.ndarray:
        """``size x dim`` matrix of unit vectors."""
        if not self.enumerable:
            raise ValueError("state space is too large to enumerate")
        return self._build_states()

    def overlaps_with(self, index: int) -> np.ndarray:
        return self.states @ self.states[index]

    def overlap_law(self) -> OverlapDistribution:
        """Law of ``<u, v>`` for ``v`` uniform; by transitivity ``u`` is arbitrary."""
        ov = self.overlaps_with(0)
        return exact_distribution(ov, np.full(len(ov), 1.0 / len(ov)), max_norm_sq=1.0)

    def min_distance(self) -> float:
        ov = self.overlaps_with(0)
        off = ov[ov < 1.0 - _DIST_TOL]
        return math.sqrt(max(0.0, 2.0 - 2.0 * float(off.max()))) if len(off) else math.inf

    def neighbours(self, radius: float) -> NeighbourTable:
        """Metric-ball neighbour lists from ``||v - w||^2 = 2 - 2 <v, w>``."""
        if self.size > NEIGHBOUR_MAX:
            raise ValueError(f"neighbour tables are capped at {NEIGHBOUR_MAX} states")
        X = self.states
        r2 = radius * radius + _DIST_TOL
        offsets = [0]
        chunks = []
        block = max(1, 2_000_000 // max(1, self.size))
        for start in range(0, self.size, block):
            G = X[start : start + block] @ X.T
            d2 = 2.0 - 2.0 * G
            for row, i in enumerate(range(start, min(start + block, self.size))):
                nb = np.nonzero((d2[row] <= r2) & (np.arange(self.size) != i))[0]
                chunks.append(nb)
                offsets.append(offsets[-1] + len(nb))
        indices = np.concatenate(chunks) if chunks else np.zeros(0, np.int64)
        return NeighbourTable(radius, np.asarray(offsets, np.int64), indices.astype(np.int64))


class SubsetSphere(StateSpace):
    """States ``1_T / sqrt(k)`` for ``|T| = k``; coordinate permutations act transitively."""

    nonnegative_overlaps = True

    def __init__(self, n: int, k: int):
        if not (1 <= k <= n):
            raise ValueError("need 1 <= k <= n")
        self.n, self.k = n, k

    def __repr__(self):
        return f"SubsetSphere(n={self.n}, k={self.k})"

    @property
    def size(self) -> int:
        return math.comb(self.n, self.k)

    @property
    def dim(self) -> int:
        return self.n

    @cached_property
    def subsets(self) -> np.ndarray:
        return np.array(list(itertools.combinations(range(self.n), self.k)), dtype=np.int64)

    def _build_states(self) -> np.ndarray:
        X = np.zeros((self.size, self.n))
        rows = np.repeat(np.arange(self.size), self.k)
        X[rows, self.subsets.ravel()] = 1.0 / math.sqrt(self.k)
        return X


class RademacherTensor(StateSpace):
    """States ``x^{(x)p} / n^{p/2}`` for ``x in {+-1}^n``, flattened.

    For even ``p`` the states of ``x`` and ``-x`` coincide, so only ``x_0 = +1``
    is kept. Signed permutations act transitively.
    """

    def __init__(self, n: int, p: int):
        if n < 1 or p < 1:
            raise ValueError("need n >= 1 and p >= 1")
        self.n, self.p = n, p
        self.nonnegative_overlaps = p % 2 == 0

    def __repr__(self):
        return f"RademacherTensor(n={self.n}, p={self.p})"

    @property
    def size(self) -> int:
        return 2 ** (self.n - 1) if self.p % 2 == 0 else 2**self.n

    @property
    def dim(self) -> int:
        return self.n**self.p

    @cached_property
    def signs(self) -> np.ndarray:
        free = self.n - 1 if self.p % 2 == 0 else self.n
        grid = np.array(list(itertools.product([1.0, -1.0], repeat=free))).reshape(-1, free)
        if self.p % 2 == 0:
            grid = np.hstack([np.ones((len(grid), 1)), grid])
        return grid

    def _build_states(self) -> np.ndarray:
        X = self.signs
        out = X
        for _ in range(self.p - 1):
            out = (out[:, :, None] * X[:, None, :]).reshape(len(X), -1)
        return out / self.n ** (self.p / 2.0)

    def overlaps_with(self, index: int) -> np.ndarray:
        # <x^p, y^p> / n^p = (<x, y> / n)^p, without forming the states.
        return (self.signs @ self.signs[index] / self.n) ** self.p
