"""Likelihood algebra on the Boolean hypercube.

A planted distribution is a mixture of product measures on ``{+-1}^n`` with
bias vectors ``u in [-1, 1]^n``; likelihood ratios satisfy
``<L_u, L_v> = prod_i (1 + u_i v_i)`` and the low-degree norm is a sum of
squared Walsh-Hadamard coefficients. Large products are kept in log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.special import gammaln, logsumexp
from scipy.stats import binom

from . import _io
from .priors import BiasedBoolean
from .rng import stream

BiasedProductPrior = BiasedBoolean


@dataclass(frozen=True)
class BiasVector:
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1:
            raise ValueError("bias vector must be one-dimensional")
        if np.any(np.abs(u) > 1.0):
            raise ValueError("bias entries must lie in [-1, 1]")
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class IIDPrior:
    """``n`` i.i.d. coordinates, each equal to ``values[i]`` w.p. ``probs[i]``."""

    n: int
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1 or len(self.values) != len(self.probs):
            raise ValueError("bad IIDPrior")
        if any(abs(v) > 1 for v in self.values) or abs(math.fsum(self.probs) - 1) > 1e-12:
            raise ValueError("values must lie in [-1, 1] and probs must sum to 1")

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    def enumerate(self) -> "FiniteBiasPrior":
        """All ``len(values)^n`` bias vectors with product weights (small ``n`` only)."""
        if len(self.values) ** self.n > 2**20:
            raise ValueError("too many bias vectors to enumerate")
        grids = np.array(np.meshgrid(*[self.values] * self.n, indexing="ij")).reshape(self.n, -1).T
        pgrid = np.array(np.meshgrid(*[self.probs] * self.n, indexing="ij")).reshape(self.n, -1).T
        return FiniteBiasPrior(grids, np.prod(pgrid, axis=1))


@dataclass(frozen=True)
class FiniteBiasPrior:
    """Finitely many bias vectors (rows) with weights."""

    vectors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        vec = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if len(vec) != len(w) or np.any(w < 0):
            raise ValueError("bad FiniteBiasPrior")
        if np.any(np.abs(vec) > 1):
            raise ValueError("bias entries must lie in [-1, 1]")
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "weights", w / w.sum())

    @property
    def n(self) -> int:
        return self.vectors.shape[1]


BooleanPrior = Union[BiasedBoolean, IIDPrior, FiniteBiasPrior]


def _as_array(u) -> np.ndarray:
    return u.u if isinstance(u, BiasVector) else np.asarray(u, dtype=float)


def log_boolean_inner(u, v) -> tuple[float, float]:
    """``(log|<L_u, L_v>|, sign)``; an exact zero factor gives ``(-inf, 0)``."""
    u, v = _as_array(u), _as_array(v)
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    f = 1.0 + u * v
    if np.any(f == 0.0):
        return -math.inf, 0.0
    # 1 + u_i v_i >= 0 on the cube, so the sign is always +1 here.
    return float(np.sum(np.log(f))), 1.0


def boolean_inner(u, v) -> float:
    """``prod_i (1 + u_i v_i)``; falls back to the log form on over/underflow."""
    u, v = _as_array(u), _as_array(v)
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    direct = math.prod((1.0 + u * v).tolist())
    if direct == 0.0 or not (1e-300 < direct < 1e300):
        logv, sign = log_boolean_inner(u, v)
        return 0.0 if sign == 0.0 else sign * math.exp(logv)
    return direct


def _coordinate_mean(prior) -> float:
    if isinstance(prior, BiasedBoolean):
        return prior.eps * prior.bias
    return prior.mean


def _elementary(w: np.ndarray, D: int) -> np.ndarray:
    """``e_0 .. e_D`` of the entries of ``w`` (one row of DP)."""
    e = np.zeros(D + 1)
    e[0] = 1.0
    for x in w:
        e[1:] = e[1:] + x * e[:-1]
    return e


def ld_boolean(prior: BooleanPrior, D: int) -> float:
    """``sum_{|S| <= D} E[prod_{i in S} u_i v_i]``, including the empty set.

    i.i.d. priors use ``sum_d C(n, d) m^(2d)`` with ``m = E u_1``; finite
    priors sum elementary symmetric polynomials of ``u * v`` over all pairs.
    """
    if D < 0:
        raise ValueError("D must be >= 0")
    if isinstance(prior, (BiasedBoolean, IIDPrior)):
        m2 = _coordinate_mean(prior) ** 2
        n = prior.n
        if m2 == 0.0:
            return 1.0
        top = min(D, n)
        try:
            return math.fsum(math.comb(n, d) * m2**d for d in range(top + 1))
        except OverflowError:
            d = np.arange(top + 1)
            logs = gammaln(n + 1) - gammaln(d + 1) - gammaln(n - d + 1) + d * math.log(m2)
            return float(np.exp(logsumexp(logs)))
    vec, w = prior.vectors, prior.weights
    D = min(D, prior.n)
    total = np.zeros(D + 1)
    for a in range(len(vec)):
        for b in range(len(vec)):
            total += w[a] * w[b] * _elementary(vec[a] * vec[b], D)
    return math.fsum(total)


def ld_boolean_mc(
    sampler: Callable[[np.random.Generator], np.ndarray], D: int, n_pairs: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo ``(estimate, standard error)`` of :func:`ld_boolean`."""
    rng = stream(seed, "ld-boolean")
    vals = np.array(
        [_elementary(sampler(rng) * sampler(rng), D).sum() for _ in range(n_pairs)]
    )
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_pairs))


# ---------------------------------------------------------------------------
# biased product prior: exact FP


@dataclass(frozen=True)
class BiasedFP:
    D: float
    delta: float
    value: float
    log_value: float
    low_mass: float


def _agreement_law(prior: BiasedBoolean) -> tuple[np.ndarray, np.ndarray]:
    n = prior.n
    A = np.arange(n + 1)
    return A, binom.logpmf(A, n, (1.0 + prior.bias**2) / 2.0)


def fp_biased(prior: BiasedBoolean, D: float) -> BiasedFP:
    """Exact FP with overlap ``s = eps^2 (2A - n)``, ``A ~ Bin(n, (1 + bias^2)/2)``.

    The pair likelihood inner product at agreement count ``A`` is
    ``(1 + eps^2)^A (1 - eps^2)^(n - A)``; everything is summed in log domain.
    """
    if D < 0:
        raise ValueError("D must be >= 0")
    n, e2 = prior.n, prior.eps**2
    A, logp = _agreement_law(prior)
    gap = np.abs(2 * A - n)
    # P(|2A - n| >= j) for every attainable j, and the largest j meeting e^-D.
    order = np.argsort(gap, kind="stable")
    mags, first = np.unique(gap[order], return_index=True)
    log_mass = np.logaddexp.reduceat(logp[order], first)
    log_tail = np.logaddexp.accumulate(log_mass[::-1])[::-1]
    level = -D if math.isfinite(D) else -math.inf
    ok = np.nonzero(log_tail >= level - 1e-12)[0]
    jmax = int(mags[ok[-1]])
    keep = gap <= jmax
    log_ip = A * math.log1p(e2) + (n - A) * math.log1p(-e2)
    logv = float(logsumexp(logp[keep] + log_ip[keep]))
    return BiasedFP(D, e2 * jmax, math.exp(logv), logv, float(np.exp(logsumexp(logp[keep]))))


def fp_biased_exact(prior: BiasedBoolean, D: float) -> float:
    return fp_biased(prior, D).value


def fp_biased_mc(prior: BiasedBoolean, D: float, n_pairs: int, seed: int) -> tuple[float, float]:
    """Monte Carlo oracle: draw ``(u, v)`` coordinatewise, average ``1{|s|<=delta} <L_u, L_v>``.

    ``delta`` is taken from the exact computation; the estimate is
    ``(mean, standard error)``.
    """
    delta = fp_biased(prior, D).delta
    rng = stream(seed, "fp-biased")
    n, eps = prior.n, prior.eps
    p_plus = (1.0 + prior.bias) / 2.0
    out = np.empty(n_pairs)
    chunk = 10_000
    for start in range(0, n_pairs, chunk):
        size = min(chunk, n_pairs - start)
        u = np.where(rng.random((size, n)) < p_plus, eps, -eps)
        v = np.where(rng.random((size, n)) < p_plus, eps, -eps)
        s = np.sum(u * v, axis=1)
        ip = np.exp(np.sum(np.log1p(u * v), axis=1))
        out[start : start + size] = np.where(np.abs(s) <= delta + 1e-12, ip, 0.0)
    return float(out.mean()), float(out.std(ddof=1) / math.sqrt(n_pairs))


def counterexample_prior(n: int, alpha: float) -> BiasedBoolean:
    """``eps = n^(-3 alpha)``, ``bias = n^(-4 alpha)``: FP small while LD(1) - 1 = n^(1 - 14 alpha)."""
    return BiasedBoolean(n, n ** (-3.0 * alpha), n ** (-4.0 * alpha))


def boolean_sweep(prior: BiasedBoolean, D_grid: Sequence[float]) -> str:
    """CSV ``D,delta,fp,ld`` for the biased product prior."""
    rows = []
    for D in sorted(D_grid):
        f = fp_biased(prior, D)
        rows.append((D, f.delta, f.value, ld_boolean(prior, int(math.floor(D)))))
    return _io.csv_text(["D", "delta", "fp", "ld"], rows)


# ---------------------------------------------------------------------------
# planted dense-and-sparse subgraph

SIGNAL = 0.9
_LOG_HI = math.log1p(SIGNAL**2)
_LOG_LO = math.log1p(-(SIGNAL**2))


@dataclass(frozen=True)
class DenseSparseSpec:
    n: int
    delta: float
    c: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not (0 < self.delta < 1) or not (0 < self.c * self.delta < 1):
            raise ValueError("need delta in (0,1) and c*delta in (0,1)")


def dense_sparse_sample(spec: DenseSparseSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Pruned ``(S', T')`` as boolean masks: ``S' = S \\ T``, ``T' = T \\ S``."""
    S = rng.random(spec.n) < spec.delta
    T = rng.random(spec.n) < spec.c * spec.delta
    return S & ~T, T & ~S


def _pairs(k: int) -> int:
    return k * (k - 1) // 2


def dense_sparse_log_inner(spec: DenseSparseSpec, sets1, sets2) -> float:
    """``log <L_u, L_v>`` for pruned pairs, from the four overlap counts."""
    S1, T1 = (np.asarray(x, dtype=bool) for x in sets1)
    S2, T2 = (np.asarray(x, dtype=bool) for x in sets2)
    if np.any(S1 & T1) or np.any(S2 & T2):
        raise ValueError("dense and sparse sets must be disjoint (prune first)")
    a = int(np.sum(S1 & S2))
    b = int(np.sum(T1 & T2))
    g = int(np.sum(S1 & T2))
    h = int(np.sum(T1 & S2))
    return (_pairs(a) + _pairs(b)) * _LOG_HI + (_pairs(g) + _pairs(h)) * _LOG_LO


def dense_sparse_inner(spec: DenseSparseSpec, sets1, sets2) -> float:
    return math.exp(dense_sparse_log_inner(spec, sets1, sets2))


def dense_sparse_degree1(sets1, sets2) -> float:
    """``sum_{i<j} u_ij v_ij`` for one pruned pair."""
    S1, T1 = (np.asarray(x, dtype=bool) for x in sets1)
    S2, T2 = (np.asarray(x, dtype=bool) for x in sets2)
    same = _pairs(int(np.sum(S1 & S2))) + _pairs(int(np.sum(T1 & T2)))
    cross = _pairs(int(np.sum(S1 & T2))) + _pairs(int(np.sum(T1 & S2)))
    return SIGNAL**2 * (same - cross)


def dense_sparse_ld1(spec: DenseSparseSpec) -> float:
    """Degree-1 part of LD (constant term excluded) for the pruned model.

    ``E u_ij = 0.9 [P(i,j in S') - P(i,j in T')]`` with
    ``P(i in S') = delta (1 - c delta)`` and ``P(i in T') = c delta (1 - delta)``.
    """
    d, c = spec.delta, spec.c
    mean = SIGNAL * ((d * (1 - c * d)) ** 2 - (c * d * (1 - d)) ** 2)
    return _pairs(spec.n) * mean * mean


def dense_sparse_ld1_mc(spec: DenseSparseSpec, n_pairs: int, seed: int) -> tuple[float, float]:
    vals = np.empty(n_pairs)
    for i in range(n_pairs):
        rng = stream(seed, "dense-sparse", i)
        vals[i] = dense_sparse_degree1(dense_sparse_sample(spec, rng), dense_sparse_sample(spec, rng))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_pairs))


# ---------------------------------------------------------------------------
# subsampling


class PairEvent(Protocol):
    def __call__(self, x, y) -> bool: ...


@dataclass(frozen=True)
class OverlapWindowEvent:
    """``|x cap y|`` in ``[lo, hi)`` for index-set samples."""

    lo: int
    hi: int

    def __call__(self, x, y) -> bool:
        return self.lo <= len(set(np.ravel(x)) & set(np.ravel(y))) < self.hi

    def first_hit(self, samples: Sequence[np.ndarray], n: int) -> tuple[int, int] | None:
        """First offending pair ``i < j`` via a sparse incidence product."""
        T = len(samples)
        rows = np.repeat(np.arange(T), [len(s) for s in samples])
        cols = np.concatenate([np.asarray(s, dtype=np.int64) for s in samples])
        M = sparse.csr_matrix((np.ones(len(cols), dtype=np.int32), (rows, cols)), shape=(T, n))
        G = sparse.triu(M @ M.T, k=1).tocoo()
        hit = (G.data >= self.lo) & (G.data < self.hi)
        if self.lo <= 0:
            raise ValueError("batch check needs lo >= 1 (zero overlaps are implicit)")
        if not np.any(hit):
            return None
        idx = np.lexsort((G.col[hit], G.row[hit]))[0]
        return int(G.row[hit][idx]), int(G.col[hit][idx])


@dataclass(frozen=True)
class SubsampleResult:
    success: bool
    samples: list
    offending: tuple[int, int] | None = None


def subsample_prior(
    sampler: Callable[[np.random.Generator], object],
    pair_event: PairEvent,
    T: int,
    seed: int,
    n: int | None = None,
    repeat: int = 0,
) -> SubsampleResult:
    """Draw ``T`` samples and accept them if no unordered pair lies in the event.

    Events with a ``first_hit`` method (and a known ground size ``n``) are
    checked in one batch; others fall back to the pairwise loop.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    rng = stream(seed, "subsample", repeat)
    samples = [sampler(rng) for _ in range(T)]
    if hasattr(pair_event, "first_hit") and n is not None and T > 1:
        bad = pair_event.first_hit(samples, n)
        return SubsampleResult(bad is None, samples, bad)
    for i in range(T):
        for j in range(i + 1, T):
            if pair_event(samples[i], samples[j]):
                return SubsampleResult(False, samples, (i, j))
    return SubsampleResult(True, samples)


def k_subset_sampler(n: int, k: int) -> Callable[[np.random.Generator], np.ndarray]:
    def draw(rng: np.random.Generator) -> np.ndarray:
        return np.sort(rng.choice(n, size=k, replace=False))

    return draw
