"""Hermite projection oracle.

Builds the orthonormal Hermite basis by Gram-Schmidt on monomials (Gaussian
moments are exact integers, accumulated in mpmath), then evaluates Gaussian
expectations by Gauss-Hermite quadrature. Nothing here uses the closed form
``E_{N(m,1)} h_k = m^k / sqrt(k!)``; that identity is what the oracle checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from numpy.polynomial import hermite_e

from .criteria import exp_trunc

MAX_DEGREE = 20
MAX_DIM = 4
MAX_INNER_DEGREE = 8
QUAD_POINTS = 200
CHECK_POINTS = 150
_WORK_DPS = 50


class QuadratureError(RuntimeError):
    """Two quadrature orders disagree beyond tolerance."""


@dataclass(frozen=True)
class HermiteBasis:
    """``coeffs[k][j]`` is the coefficient of ``x^j`` in ``h_k``."""

    max_degree: int
    coeffs: tuple[tuple[float, ...], ...]

    def evaluate(self, k: int, x: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(x, self.coeffs[k])

    def gram(self, n_points: int = QUAD_POINTS) -> np.ndarray:
        x, w = _nodes(n_points)
        vals = np.array([self.evaluate(k, x) for k in range(self.max_degree + 1)])
        return (vals * w) @ vals.T

    def to_csv(self) -> str:
        from . import _io

        rows = [(k, j, c) for k, cs in enumerate(self.coeffs) for j, c in enumerate(cs)]
        return _io.csv_text(["degree", "power", "coefficient"], rows)


def _gauss_moment(j: int) -> int:
    """``E x^j`` under N(0,1): ``(j-1)!!`` for even ``j``, else 0."""
    if j % 2:
        return 0
    out = 1
    for i in range(j - 1, 0, -2):
        out *= i
    return out


@lru_cache(maxsize=None)
def build_basis(max_degree: int) -> HermiteBasis:
    """Orthonormal Hermite polynomials ``h_0 .. h_max_degree``."""
    if not (0 <= max_degree <= MAX_DEGREE):
        raise ValueError(f"max_degree must lie in [0, {MAX_DEGREE}]")
    with mpmath.workdps(_WORK_DPS):
        def inner(p, q):
            return mpmath.fsum(
                a * b * _gauss_moment(i + j)
                for i, a in enumerate(p) for j, b in enumerate(q) if a and b
            )

        basis: list[list] = []
        for k in range(max_degree + 1):
            v = [mpmath.mpf(0)] * k + [mpmath.mpf(1)]
            for h in basis:
                proj = inner(v, h)
                v = [vi - proj * (h[i] if i < len(h) else 0) for i, vi in enumerate(v)]
            norm = mpmath.sqrt(inner(v, v))
            basis.append([vi / norm for vi in v])
        coeffs = tuple(tuple(float(c) for c in h) for h in basis)
    return HermiteBasis(max_degree, coeffs)


@lru_cache(maxsize=None)
def _nodes(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = hermite_e.hermegauss(n_points)
    return x, w / math.sqrt(2.0 * math.pi)


def _quad_mean(basis: HermiteBasis, k: int, m: float, n_points: int) -> float:
    x, w = _nodes(n_points)
    return float(np.dot(w, basis.evaluate(k, m + x)))


def shifted_mean(k: int, m: float, basis: HermiteBasis | None = None) -> float:
    """``E_{Y ~ N(m, 1)} h_k(Y)`` by Gauss-Hermite quadrature.

    The result at ``QUAD_POINTS`` nodes is compared with ``CHECK_POINTS``
    nodes; disagreement beyond ``1e-10 * (1 + |value|)`` raises
    :class:`QuadratureError`.
    """
    basis = basis or build_basis(max(k, 1))
    if k > basis.max_degree:
        raise ValueError("degree exceeds basis")
    hi = _quad_mean(basis, k, m, QUAD_POINTS)
    lo = _quad_mean(basis, k, m, CHECK_POINTS)
    if abs(hi - lo) > 1e-10 * (1.0 + abs(hi)):
        raise QuadratureError(f"h_{k} at mean {m}: {hi!r} vs {lo!r}")
    return hi


def _check_vectors(a, b, D) -> tuple[np.ndarray, np.ndarray]:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be vectors of equal length")
    if len(a) > MAX_DIM:
        raise ValueError(f"dimension capped at {MAX_DIM}")
    if not (0 <= D <= MAX_INNER_DEGREE):
        raise ValueError(f"degree capped at {MAX_INNER_DEGREE}")
    return a, b


def _multi_indices(dim: int, D: int, exact: bool):
    for alpha in itertools.product(range(D + 1), repeat=dim):
        total = sum(alpha)
        if total == D or (not exact and total < D):
            yield alpha


def _projected(a, b, D, exact: bool) -> float:
    a, b = _check_vectors(a, b, D)
    basis = build_basis(max(D, 1))
    fa = [[shifted_mean(k, ai, basis) for k in range(D + 1)] for ai in a]
    fb = [[shifted_mean(k, bi, basis) for k in range(D + 1)] for bi in b]
    terms = []
    for alpha in _multi_indices(len(a), D, exact):
        t = 1.0
        for i, k in enumerate(alpha):
            t *= fa[i][k] * fb[i][k]
        terms.append(t)
    return math.fsum(terms)


def projected_inner(a, b, D: int) -> float:
    """``<L_a^{<=D}, L_b^{<=D}>`` by explicit projection onto ``h_alpha``, ``|alpha| <= D``."""
    return _projected(a, b, D, exact=False)


def projected_inner_exact_degree(a, b, D: int) -> float:
    """Degree-exactly-``D`` slice of :func:`projected_inner`."""
    return _projected(a, b, D, exact=True)


def norm_upper_check(u_norm_sq: float, lam: float, D: int, M: float) -> bool:
    """``exp_trunc(lam^2 ||u||^2, D) <= (D + 1)(1 + lam^2 M)^D``."""
    if u_norm_sq > M:
        raise ValueError("u_norm_sq must not exceed M")
    return exp_trunc(lam * lam * u_norm_sq, D) <= (D + 1) * (1.0 + lam * lam * M) ** D


def factorial_bounds_hold(n: int) -> bool:
    """``n^n / e^(n-1) <= n! <= n^(n+1) / e^(n-1)``, evaluated at 60 digits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    with mpmath.workdps(60):
        f = mpmath.factorial(n)
        scale = mpmath.exp(n - 1)
        return mpmath.mpf(n) ** n / scale <= f <= mpmath.mpf(n) ** (n + 1) / scale
