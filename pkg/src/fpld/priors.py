"""Signal priors and the law of the overlap ``s = <u, v>``.

A prior is described declaratively by one of the frozen dataclasses below.
:func:`overlap_distribution` turns it into an :class:`OverlapDistribution`,
either exactly (sorted support + pmf) or empirically (seeded samples).

For Boolean bias priors the overlap is taken to be the plain inner product
``<u, v>``; other notions of overlap are possible there and are not modelled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Literal, Union

import numpy as np

from . import _io
from .rng import stream

ATOM_TOL = 1e-12
MAX_EXACT_ATOMS = 4096


# ---------------------------------------------------------------------------
# prior specifications


@dataclass(frozen=True)
class SparseBinary:
    """Uniform over 0/1 vectors in ``R^n`` with exactly ``k`` ones."""

    n: int
    k: int

    def __post_init__(self):
        if not (1 <= self.k <= self.n):
            raise ValueError(f"SparseBinary needs 1 <= k <= n, got n={self.n}, k={self.k}")


@dataclass(frozen=True)
class SparseRademacher:
    """i.i.d. coordinates ``+-1/sqrt(rho)`` w.p. ``rho/2`` each, else 0."""

    n: int
    rho: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("SparseRademacher needs n >= 1")
        if not (0.0 < self.rho <= 1.0):
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")


@dataclass(frozen=True)
class TensorPower:
    """``u^{(x)p}`` for ``u`` drawn from ``base``; overlaps become ``s_base**p``."""

    base: "PriorSpec"
    p: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("tensor power p must be >= 1")


@dataclass(frozen=True)
class BiasedBoolean:
    """Bias vectors with i.i.d. coordinates ``+eps`` w.p. ``(1+bias)/2``, else ``-eps``."""

    n: int
    eps: float
    bias: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("BiasedBoolean needs n >= 1")
        if not (0.0 < self.eps < 1.0 and 0.0 < self.bias < 1.0):
            raise ValueError("eps and bias must lie in (0, 1)")


@dataclass(frozen=True)
class CustomSampler:
    """A prior registered by name with :func:`register_sampler`."""

    dimension: int
    sampler_id: str


PriorSpec = Union[SparseBinary, SparseRademacher, TensorPower, BiasedBoolean, CustomSampler]


@dataclass(frozen=True)
class CustomPrior:
    """Registry entry backing :class:`CustomSampler`.

    ``sample(rng, size, dimension)`` returns a ``(size, dimension)`` array.
    ``atoms(dimension)``, when given, returns ``(vectors, weights)`` of a
    finite support and enables exact mode.
    """

    sample: Callable[[np.random.Generator, int, int], np.ndarray]
    atoms: Callable[[int], tuple[np.ndarray, np.ndarray]] | None = None


_REGISTRY: dict[str, CustomPrior] = {}


def register_sampler(sampler_id: str, prior: CustomPrior) -> None:
    _REGISTRY[sampler_id] = prior


def get_sampler(sampler_id: str) -> CustomPrior:
    try:
        return _REGISTRY[sampler_id]
    except KeyError:
        raise KeyError(f"no custom sampler registered as {sampler_id!r}") from None


def _unit_vector(dimension: int) -> np.ndarray:
    e = np.zeros(dimension)
    e[0] = 1.0
    return e


register_sampler(
    "unit_point_mass",
    CustomPrior(
        sample=lambda rng, size, dim: np.tile(_unit_vector(dim), (size, 1)),
        atoms=lambda dim: (_unit_vector(dim)[None, :], np.ones(1)),
    ),
)


# ---------------------------------------------------------------------------
# JSON round trip

_KIND_NAMES = {
    SparseBinary: "sparse_binary",
    SparseRademacher: "sparse_rademacher",
    TensorPower: "tensor_power",
    BiasedBoolean: "biased_boolean",
    CustomSampler: "custom_sampler",
}


def prior_to_dict(prior: PriorSpec) -> dict:
    kind = _KIND_NAMES[type(prior)]
    if isinstance(prior, TensorPower):
        return {"kind": kind, "base": prior_to_dict(prior.base), "p": prior.p}
    out = {"kind": kind}
    out.update({f: getattr(prior, f) for f in prior.__dataclass_fields__})
    return out


def prior_from_dict(data: dict) -> PriorSpec:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind == "tensor_power":
        return TensorPower(base=prior_from_dict(data["base"]), p=int(data["p"]))
    for cls, name in _KIND_NAMES.items():
        if name == kind:
            unknown = set(data) - set(cls.__dataclass_fields__)
            if unknown:
                raise ValueError(f"unknown fields for {kind}: {sorted(unknown)}")
            return cls(**data)
    raise ValueError(f"unknown prior kind {kind!r}")


def prior_to_json(prior: PriorSpec) -> str:
    return json.dumps(prior_to_dict(prior), sort_keys=True)


def prior_from_json(text: str) -> PriorSpec:
    return prior_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# overlap distributions


@dataclass(frozen=True)
class OverlapDistribution:
    """Law of the overlap, exact (``support``/``pmf``) or empirical (``samples``).

    ``max_norm_sq`` is ``sup ||u||^2`` over the prior's support when known.
    """

    mode: Literal["exact", "empirical"]
    support: np.ndarray | None = None
    pmf: np.ndarray | None = None
    samples: np.ndarray | None = None
    seed: int | None = None
    max_norm_sq: float | None = None

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    def values_and_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Atoms with their weights; empirical samples get weight ``1/N`` each."""
        if self.is_exact:
            return self.support, self.pmf
        n = len(self.samples)
        if n == 0:
            raise ValueError("empirical distribution has no samples")
        return self.samples, np.full(n, 1.0 / n)

    def max_abs(self) -> float:
        vals, _ = self.values_and_weights()
        return float(np.max(np.abs(vals)))

    def to_csv(self) -> str:
        if self.is_exact:
            return _io.csv_text(["value", "pmf"], zip(self.support, self.pmf))
        return _io.csv_text(["value"], ((v,) for v in self.samples))


def exact_distribution(values, weights, max_norm_sq: float | None = None) -> OverlapDistribution:
    """Build an exact law, merging atoms closer than ``ATOM_TOL`` and normalizing."""
    values = np.asarray(values, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if values.shape != weights.shape:
        raise ValueError("values and weights must have the same length")
    if np.any(weights < 0):
        raise ValueError("negative weight")
    keep = weights > 0
    values, weights = values[keep], weights[keep]
    order = np.argsort(values, kind="stable")
    values, weights = values[order], weights[order]
    merged_v: list[float] = []
    merged_w: list[float] = []
    for v, w in zip(values, weights):
        if merged_v and v - merged_v[-1] <= ATOM_TOL:
            merged_w[-1] += w
        else:
            merged_v.append(float(v))
            merged_w.append(float(w))
    pmf = np.array(merged_w)
    pmf = pmf / math.fsum(pmf)
    return OverlapDistribution(
        mode="exact", support=np.array(merged_v), pmf=pmf, max_norm_sq=max_norm_sq
    )


def rescaled(dist: OverlapDistribution, factor: float) -> OverlapDistribution:
    """The law of ``factor * s`` (``factor > 0``); ``max_norm_sq`` scales along."""
    if factor <= 0:
        raise ValueError("factor must be positive")
    m = None if dist.max_norm_sq is None else dist.max_norm_sq * factor
    if dist.is_exact:
        return OverlapDistribution("exact", support=dist.support * factor, pmf=dist.pmf, max_norm_sq=m)
    return OverlapDistribution(
        "empirical", samples=dist.samples * factor, seed=dist.seed, max_norm_sq=m
    )


def mapped(dist: OverlapDistribution, fn: Callable[[np.ndarray], np.ndarray],
           max_norm_sq: float | None = None) -> OverlapDistribution:
    """The law of ``fn(s)``; atoms that collide are merged."""
    if dist.is_exact:
        return exact_distribution(fn(dist.support), dist.pmf, max_norm_sq)
    return OverlapDistribution(
        "empirical", samples=np.asarray(fn(dist.samples), dtype=float), seed=dist.seed,
        max_norm_sq=max_norm_sq,
    )


def wigner_surrogate(n: int, rho: float) -> OverlapDistribution:
    """Overlap law of the rank-one spiked Wigner model with a sparse Rademacher prior.

    The likelihood inner product there is ``exp(lam^2 <u,v>^2 / (2n))``, so the
    effective overlap is ``s^2 / (2n)``; its norm bound is ``(n/rho)^2 / (2n)``.
    """
    base = overlap_distribution(SparseRademacher(n, rho))
    return mapped(base, lambda s: s * s / (2.0 * n), n / (2.0 * rho * rho))


def _hypergeom_pmf(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    lo = max(0, 2 * k - n)
    ells = np.arange(lo, k + 1)
    total = math.comb(n, k)
    pmf = np.array([math.comb(k, l) * math.comb(n - k, k - l) / total for l in ells])
    return ells.astype(float), pmf


def _rademacher_counts(n: int, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Law of ``J = sum_i sign products`` so that ``s = J / rho``."""
    a = rho * rho / 2.0
    kernel = np.array([a, 1.0 - 2.0 * a, a])
    pmf = np.ones(1)
    for _ in range(n):
        pmf = np.convolve(pmf, kernel)
    pmf = 0.5 * (pmf + pmf[::-1])
    return np.arange(-n, n + 1, dtype=float), pmf


def _binomial_pmf(n: int, p: float) -> np.ndarray:
    from scipy.stats import binom

    return binom.pmf(np.arange(n + 1), n, p)


def max_norm_sq(prior: PriorSpec) -> float | None:
    if isinstance(prior, SparseBinary):
        return float(prior.k)
    if isinstance(prior, SparseRademacher):
        return prior.n / prior.rho
    if isinstance(prior, BiasedBoolean):
        return prior.n * prior.eps**2
    if isinstance(prior, TensorPower):
        base = max_norm_sq(prior.base)
        return None if base is None else base**prior.p
    entry = get_sampler(prior.sampler_id)
    if entry.atoms is None:
        return None
    vecs, _ = entry.atoms(prior.dimension)
    return float(np.max(np.sum(vecs**2, axis=1)))


def _exact(prior: PriorSpec) -> OverlapDistribution:
    m = max_norm_sq(prior)
    if isinstance(prior, SparseBinary):
        vals, pmf = _hypergeom_pmf(prior.n, prior.k)
    elif isinstance(prior, SparseRademacher):
        if 2 * prior.n + 1 > MAX_EXACT_ATOMS:
            raise ValueError(
                f"exact SparseRademacher law capped at {MAX_EXACT_ATOMS} atoms (n={prior.n})"
            )
        counts, pmf = _rademacher_counts(prior.n, prior.rho)
        vals = counts / prior.rho
    elif isinstance(prior, BiasedBoolean):
        agree = np.arange(prior.n + 1, dtype=float)
        vals = prior.eps**2 * (2.0 * agree - prior.n)
        pmf = _binomial_pmf(prior.n, (1.0 + prior.bias**2) / 2.0)
    elif isinstance(prior, TensorPower):
        base = _exact(prior.base)
        vals, pmf = base.support**prior.p, base.pmf
    else:
        entry = get_sampler(prior.sampler_id)
        if entry.atoms is None:
            raise ValueError(f"custom sampler {prior.sampler_id!r} has no enumerable support")
        vecs, w = entry.atoms(prior.dimension)
        w = np.asarray(w, float) / np.sum(w)
        vals = (vecs @ vecs.T).ravel()
        pmf = np.outer(w, w).ravel()
    return exact_distribution(vals, pmf, max_norm_sq=m)


def _overlap_samples(prior: PriorSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(prior, SparseBinary):
        return rng.hypergeometric(prior.k, prior.n - prior.k, prior.k, size=size).astype(float)
    if isinstance(prior, SparseRademacher):
        a = prior.rho**2 / 2.0
        counts = rng.multinomial(prior.n, [a, a, 1.0 - 2.0 * a], size=size)
        return (counts[:, 0] - counts[:, 1]) / prior.rho
    if isinstance(prior, BiasedBoolean):
        agree = rng.binomial(prior.n, (1.0 + prior.bias**2) / 2.0, size=size)
        return prior.eps**2 * (2.0 * agree - prior.n)
    if isinstance(prior, TensorPower):
        return _overlap_samples(prior.base, rng, size) ** prior.p
    entry = get_sampler(prior.sampler_id)
    u = entry.sample(rng, size, prior.dimension)
    v = entry.sample(rng, size, prior.dimension)
    return np.einsum("ij,ij->i", u, v)


def overlap_distribution(
    prior: PriorSpec,
    mode: Literal["exact", "empirical"] = "exact",
    n_samples: int = 0,
    seed: int = 0,
) -> OverlapDistribution:
    """Materialize the law of ``s = <u, v>`` for independent ``u, v ~ prior``.

    Exact mode covers every kind with an enumerable overlap law: hypergeometric
    (SparseBinary), binomial agreement counts (BiasedBoolean), convolution
    (SparseRademacher, up to ``MAX_EXACT_ATOMS`` atoms), tensor powers of
    those, and custom samplers that expose ``atoms``. Empirical mode draws
    ``n_samples`` i.i.d. overlaps from the stream ``(seed, "overlap")``.
    """
    if mode == "exact":
        return _exact(prior)
    if mode != "empirical":
        raise ValueError(f"unknown mode {mode!r}")
    if n_samples <= 0:
        raise ValueError("empirical mode needs n_samples > 0")
    rng = stream(seed, "overlap")
    samples = _overlap_samples(prior, rng, n_samples)
    return OverlapDistribution(
        mode="empirical", samples=np.asarray(samples, float), seed=seed, max_norm_sq=max_norm_sq(prior)
    )


# ---------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class DeviationThreshold:
    D: float
    delta: float


def _magnitude_groups(support: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct ``|s|`` values and the group index of each atom.

    Magnitudes within ``ATOM_TOL`` relative of each other are one group, so
    ``s`` and ``-s`` pair up even when rounding made them differ by a few ulps.
    """
    mags = np.abs(support)
    order = np.argsort(mags, kind="stable")
    sorted_mags = mags[order]
    new_group = np.empty(len(mags), dtype=bool)
    new_group[:1] = True
    new_group[1:] = np.diff(sorted_mags) > ATOM_TOL * np.maximum(1.0, sorted_mags[1:])
    group_sorted = np.cumsum(new_group) - 1
    inverse = np.empty(len(mags), dtype=np.int64)
    inverse[order] = group_sorted
    return sorted_mags[new_group], inverse


def _abs_tails(dist: OverlapDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Distinct ``|s|`` values (ascending) and ``P(|s| >= value)`` for each."""
    mags, inverse = _magnitude_groups(dist.support)
    mass = np.bincount(inverse, weights=dist.pmf, minlength=len(mags))
    tails = np.cumsum(mass[::-1])[::-1]
    tails[0] = 1.0
    return mags, np.minimum(tails, 1.0)


def tail_prob(dist: OverlapDistribution, eps: float) -> float:
    """``P(|s| >= eps)``."""
    if dist.is_exact:
        mask = np.abs(dist.support) >= eps - ATOM_TOL / 2 * max(1.0, eps)
        if eps <= 0:
            return 1.0
        return float(min(1.0, math.fsum(dist.pmf[mask])))
    vals, _ = dist.values_and_weights()
    return float(np.mean(np.abs(vals) >= eps))


def delta_of_D(dist: OverlapDistribution, D: float) -> DeviationThreshold:
    """``sup {eps >= 0 : P(|s| >= eps) >= exp(-D)}``.

    Exact laws: the supremum is attained at an atom of ``|s|``. Empirical laws
    use the upper plug-in quantile ``|s|_(ceil((1 - e^-D) N))``, so the two
    continuity identities hold only up to sampling error.
    """
    if D < 0:
        raise ValueError("D must be >= 0")
    level = math.exp(-D) if math.isfinite(D) else 0.0
    if dist.is_exact:
        mags, tails = _abs_tails(dist)
        ok = np.nonzero(tails >= level)[0]
        return DeviationThreshold(D=D, delta=float(mags[ok[-1]]))
    vals = np.sort(np.abs(dist.samples))
    n = len(vals)
    idx = math.ceil((1.0 - level) * n)
    idx = min(max(idx, 1), n)
    return DeviationThreshold(D=D, delta=float(vals[idx - 1]))


def moment(dist: OverlapDistribution, d: int) -> float:
    """``E[s^d]``; exact laws pair ``+-|s|`` atoms so symmetric odd moments vanish."""
    if d < 0:
        raise ValueError("moment order must be >= 0")
    if d == 0:
        return 1.0
    if not dist.is_exact:
        vals, _ = dist.values_and_weights()
        return float(np.mean(vals**d))
    sign = np.sign(dist.support)
    uniq, inverse = _magnitude_groups(dist.support)
    signed = np.bincount(inverse, weights=dist.pmf * (sign if d % 2 else 1.0), minlength=len(uniq))
    return math.fsum(uniq**d * signed)
