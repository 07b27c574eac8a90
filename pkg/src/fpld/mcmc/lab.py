"""Gibbs measures, free-energy barriers and Delta-local Metropolis chains.

A :class:`GibbsSystem` couples a finite state space with an observation
``Y = lam u + Z`` and an inverse temperature ``beta``; its Gibbs measure is
``nu(v) ~ exp(beta <v, Y>)``. Chains propose uniformly from the metric ball
of radius ``Delta`` and accept with the Metropolis-Hastings ratio (the
degree correction vanishes on transitive spaces but keeps detailed balance
exact near irregular neighbourhoods).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
from scipy.special import logsumexp

from .. import _io
from ..criteria import fp as fp_criterion
from ..priors import delta_of_D
from ..rng import stream
from . import backend as _backend
from .spaces import NeighbourTable, StateSpace

_OVERLAP_TOL = 1e-12
DEFAULT_CHECKPOINTS = (10, 100, 1000, 10_000)


def draw_observation(space: StateSpace, u_index: int, lam: float, seed: int) -> np.ndarray:
    """``Y = lam u + Z`` with ``Z`` standard Gaussian from stream ``(seed, "noise")``."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    z = stream(seed, "noise").standard_normal(space.dim)
    return lam * space.states[u_index] + z


@dataclass
class GibbsSystem:
    space: StateSpace
    u_index: int
    lam: float
    beta: float
    Y: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.beta < 0 or self.lam < 0:
            raise ValueError("beta and lambda must be >= 0")
        if len(self.Y) != self.space.dim:
            raise ValueError("observation has the wrong dimension")

    @classmethod
    def draw(cls, space: StateSpace, u_index: int, lam: float, beta: float, seed: int) -> "GibbsSystem":
        return cls(space, u_index, lam, beta, draw_observation(space, u_index, lam, seed), seed)

    @cached_property
    def energies(self) -> np.ndarray:
        """``<v, Y>`` for every state ``v`` (the negative Hamiltonian)."""
        return self.space.states @ self.Y

    @cached_property
    def overlaps(self) -> np.ndarray:
        """``<u, v>`` for every state ``v``."""
        return self.space.overlaps_with(self.u_index)


def log_gibbs(system: GibbsSystem) -> np.ndarray:
    if not system.space.enumerable:
        raise ValueError("state space is not enumerable")
    logits = system.beta * system.energies
    return logits - logsumexp(logits)


def gibbs_exact(system: GibbsSystem) -> np.ndarray:
    """The normalized Gibbs measure over all states."""
    return np.exp(log_gibbs(system))


# ---------------------------------------------------------------------------
# barrier regions


@dataclass(frozen=True)
class Regions:
    delta: float
    eps: float
    A: np.ndarray
    B: np.ndarray


def regions_at(system: GibbsSystem, delta: float, eps: float) -> Regions:
    """``A = {|<u,v>| <= delta}``, ``B = {<u,v> in (delta, (1+eps) delta]}``."""
    ov = system.overlaps
    A = np.abs(ov) <= delta + _OVERLAP_TOL
    B = (ov > delta + _OVERLAP_TOL) & (ov <= (1.0 + eps) * delta + _OVERLAP_TOL)
    if not A.any():
        raise ValueError("region A is empty")
    return Regions(delta, eps, A, B)


def regions(system: GibbsSystem, D: float, eps: float) -> Regions:
    """Barrier regions with ``delta = delta(D)`` of the uniform prior on the space."""
    if not (0.0 < eps < 0.5):
        raise ValueError("eps must lie in (0, 1/2)")
    if D < 2:
        raise ValueError("D must be >= 2")
    delta = delta_of_D(system.space.overlap_law(), D).delta
    return regions_at(system, delta, eps)


def tilde_lambda(beta: float, lam: float, eps: float, nonnegative: bool) -> float:
    factor = (1.0 + eps) if nonnegative else (2.0 + eps)
    return math.sqrt(beta * lam * factor / (1.0 - 2.0 * eps))


@dataclass(frozen=True)
class BarrierReport:
    D: float
    eps: float
    delta: float
    A_mass: float
    B_mass: float
    ratio: float
    lambda_tilde: float
    fp_value: float
    theorem_bound: float
    bound_holds: bool


def barrier_bound(fp_value: float, D: float, eps: float) -> float:
    return 2.0 * (2.0 * fp_value) ** (1.0 - 2.0 * eps) * math.exp(-eps * D)


def barrier_ratio(
    system: GibbsSystem, D: float, eps: float, fp_value: float | None = None
) -> BarrierReport:
    """``nu(B) / nu(A)`` against ``2 (2 FP(D + log 2, lam~))^(1 - 2 eps) e^(-eps D)``."""
    reg = regions(system, D, eps)
    lt = tilde_lambda(system.beta, system.lam, eps, system.space.nonnegative_overlaps)
    if fp_value is None:
        fp_value = fp_criterion(system.space.overlap_law(), D + math.log(2.0), lt).value
    logp = log_gibbs(system)
    log_a = float(logsumexp(logp[reg.A]))
    log_b = float(logsumexp(logp[reg.B])) if reg.B.any() else -math.inf
    ratio = math.exp(log_b - log_a)
    bound = barrier_bound(fp_value, D, eps)
    return BarrierReport(
        D, eps, reg.delta, math.exp(log_a), math.exp(log_b), ratio, lt, fp_value, bound,
        ratio <= bound,
    )


@dataclass(frozen=True)
class BarrierExperiment:
    seeds: int
    violations: int
    fraction: float
    allowed: float
    passes: bool
    fp_value: float
    theorem_bound: float
    ratios: tuple[float, ...] = field(repr=False, default=())


def barrier_experiment(
    space: StateSpace, u_index: int, lam: float, beta: float, D: float, eps: float,
    n_seeds: int, seed: int,
) -> BarrierExperiment:
    """Violation frequency of the barrier bound over independent noise draws.

    Passes when the fraction is at most ``e^(-eps D) + 3 sqrt(p (1-p) / n_seeds)``.
    """
    lt = tilde_lambda(beta, lam, eps, space.nonnegative_overlaps)
    fpv = fp_criterion(space.overlap_law(), D + math.log(2.0), lt).value
    ratios, bad = [], 0
    for i in range(n_seeds):
        system = GibbsSystem.draw(space, u_index, lam, beta, _sub_seed(seed, i))
        rep = barrier_ratio(system, D, eps, fp_value=fpv)
        ratios.append(rep.ratio)
        bad += not rep.bound_holds
    p = math.exp(-eps * D)
    allowed = p + 3.0 * math.sqrt(p * (1.0 - p) / n_seeds)
    frac = bad / n_seeds
    return BarrierExperiment(
        n_seeds, bad, frac, allowed, frac <= allowed, fpv, barrier_bound(fpv, D, eps), tuple(ratios)
    )


def _sub_seed(seed: int, index: int) -> int:
    return int(stream(seed, "sub-seed", index).integers(0, 2**63))


# ---------------------------------------------------------------------------
# chains


@dataclass
class ChainTrace:
    states: np.ndarray
    overlaps: np.ndarray
    delta_loc: float
    seed: int
    backend: str

    def to_csv(self) -> str:
        return _io.csv_text(["t", "overlap"], enumerate(self.overlaps))


def _table(system: GibbsSystem, delta_loc: float) -> NeighbourTable:
    table = system.space.neighbours(delta_loc)
    if np.any(table.degrees == 0):
        raise ValueError(
            f"Delta={delta_loc} is below the minimum inter-state distance; no moves possible"
        )
    return table


def _chain_uniforms(seed: int, index: int, steps: int) -> tuple[np.ndarray, np.ndarray]:
    rng = stream(seed, "chain", index)
    prop = rng.random(steps)
    logu = np.log(1.0 - rng.random(steps))
    return prop, logu


def _inputs(system: GibbsSystem, table: NeighbourTable):
    return (
        np.ascontiguousarray(system.energies, dtype=np.float64),
        np.ascontiguousarray(table.offsets, dtype=np.int64),
        np.ascontiguousarray(table.indices, dtype=np.int64),
        np.log(table.degrees.astype(np.float64)),
        float(system.beta),
    )


def run_chain(
    system: GibbsSystem, delta_loc: float, steps: int, start: int, seed: int,
    backend: str | None = None,
) -> ChainTrace:
    """One Metropolis chain of ``steps`` transitions from state ``start``."""
    kern = _backend.get(backend)
    table = _table(system, delta_loc)
    prop, logu = _chain_uniforms(seed, 0, steps)
    states = kern.run_chains(
        *_inputs(system, table), np.array([start], np.int64), prop[None, :].copy(), logu[None, :].copy()
    )[0]
    return ChainTrace(states, system.overlaps[states], delta_loc, seed, _backend.name_of(kern))


def hitting_times(
    system: GibbsSystem, delta_loc: float, target: np.ndarray, starts: Sequence[int],
    t_budget: int, seed: int, backend: str | None = None, block: int = 100,
) -> np.ndarray:
    """First entrance time into ``target`` per chain (``-1`` if beyond ``t_budget``).

    Chain ``i`` always uses stream ``(seed, "chain", i)``, so results do not
    depend on ``block``.
    """
    kern = _backend.get(backend)
    inputs = _inputs(system, _table(system, delta_loc))
    target = np.ascontiguousarray(target, dtype=np.uint8)
    starts = np.asarray(starts, dtype=np.int64)
    out = np.empty(len(starts), dtype=np.int64)
    for lo in range(0, len(starts), block):
        hi = min(lo + block, len(starts))
        prop = np.empty((hi - lo, t_budget))
        logu = np.empty((hi - lo, t_budget))
        for row, i in enumerate(range(lo, hi)):
            prop[row], logu[row] = _chain_uniforms(seed, i, t_budget)
        out[lo:hi] = kern.hit_times(*inputs, starts[lo:hi].copy(), prop, logu, target)
    return out


@dataclass(frozen=True)
class HittingReport:
    delta: float
    delta_loc: float
    trials: int
    t_budget: int
    init: str
    nu_A: float
    nu_B: float
    checkpoints: tuple[int, ...]
    empirical: tuple[float, ...]
    conductance_bound: tuple[float, ...]
    allowed: tuple[float, ...]
    holds: bool
    backend: str


def initial_states(
    system: GibbsSystem, A: np.ndarray, init: Literal["nu|A", "worst"] | int, trials: int, seed: int
) -> np.ndarray:
    """Starting states: draws from ``nu`` conditioned on ``A``, the A-state with
    the lowest ``<v, Y>``, or a fixed index."""
    if isinstance(init, (int, np.integer)) and not isinstance(init, bool):
        return np.full(trials, int(init), dtype=np.int64)
    idx = np.nonzero(A)[0]
    if init == "worst":
        return np.full(trials, idx[np.argmin(system.energies[idx])], dtype=np.int64)
    if init != "nu|A":
        raise ValueError(f"unknown init {init!r}")
    logp = log_gibbs(system)[idx]
    p = np.exp(logp - logsumexp(logp))
    return np.array([idx[stream(seed, "init", i).choice(len(idx), p=p)] for i in range(trials)])


def hitting_experiment(
    system: GibbsSystem,
    delta_loc: float,
    reg: Regions,
    trials: int,
    t_budget: int,
    init: Literal["nu|A", "worst"] | int = "nu|A",
    seed: int = 0,
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
    backend: str | None = None,
) -> HittingReport:
    """Empirical ``Pr(tau_B <= t)`` against ``t nu(B) / nu(A)``.

    The inequality is asserted with ``3`` binomial standard deviations of
    slack (at the bound's own rate); ``holds`` is meaningful for the
    ``nu|A`` initialization only.
    """
    if not reg.A.any():
        raise ValueError("region A is empty")
    checkpoints = tuple(int(t) for t in checkpoints if t <= t_budget)
    starts = initial_states(system, reg.A, init, trials, seed)
    kern = _backend.get(backend)
    tau = hitting_times(system, delta_loc, reg.B, starts, t_budget, seed, backend)
    nu = gibbs_exact(system)
    nu_a, nu_b = float(nu[reg.A].sum()), float(nu[reg.B].sum())
    emp, bnd, allowed = [], [], []
    for t in checkpoints:
        e = float(np.mean((tau >= 0) & (tau <= t)))
        b = t * nu_b / nu_a
        p = min(1.0, b)
        emp.append(e)
        bnd.append(b)
        allowed.append(b + 3.0 * math.sqrt(p * (1.0 - p) / trials))
    holds = all(e <= a for e, a in zip(emp, allowed))
    return HittingReport(
        reg.delta, delta_loc, trials, t_budget, str(init), nu_a, nu_b, checkpoints,
        tuple(emp), tuple(bnd), tuple(allowed), holds, _backend.name_of(kern),
    )


# ---------------------------------------------------------------------------
# exact kernel


def transition_matrix(system: GibbsSystem, delta_loc: float) -> np.ndarray:
    """Dense Metropolis-Hastings transition matrix of the implemented chain."""
    table = _table(system, delta_loc)
    S = system.space.size
    E, beta = system.energies, system.beta
    deg = table.degrees.astype(float)
    P = np.zeros((S, S))
    for x in range(S):
        ys = table.of(x)
        log_r = beta * (E[ys] - E[x]) + math.log(deg[x]) - np.log(deg[ys])
        P[x, ys] = np.minimum(1.0, np.exp(np.minimum(log_r, 0.0))) / deg[x]
        P[x, x] = 1.0 - P[x].sum()
    return P


def detailed_balance_residual(system: GibbsSystem, delta_loc: float) -> float:
    """``sum_{v, v'} |nu(v) P(v, v') - nu(v') P(v', v)|``."""
    nu = gibbs_exact(system)
    F = nu[:, None] * transition_matrix(system, delta_loc)
    return float(np.abs(F - F.T).sum())
