"""LD, FP, LO and chi^2+1 for Gaussian additive models.

All four criteria are expectations over the overlap law:

* ``LD(D, lam) = E exp_trunc(lam^2 s, D)``
* ``LO(delta, lam) = E[1{|s| <= delta} exp(lam^2 s)]``
* ``FP(D, lam) = LO(delta(D), lam)``
* ``chi2+1(lam) = E exp(lam^2 s)``

The exponential-type criteria are accumulated in log domain so large
``lam^2 s`` never overflows silently; ``CriterionPoint.log_value`` is always
finite (or ``-inf`` for an empty indicator) and ``value`` may be ``inf``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from . import _io
from .priors import OverlapDistribution, delta_of_D

log = logging.getLogger(__name__)

Criterion = Literal["LD", "FP", "LO", "CHI2"]

# Magnitudes are grouped at 1e-12 relative; half of that never swallows a neighbour.
_INDICATOR_TOL = 5e-13
OVERFLOW_EXPONENT = 700.0
HOLD_SLACK = 1e-10
TIE_SLACK = 1e-9


def exp_trunc(x, D: int):
    """Degree-``D`` Taylor polynomial of ``exp`` at ``x`` (Kahan-summed).

    Accepts scalars or arrays.
    """
    if D < 0:
        raise ValueError("D must be >= 0")
    x = np.asarray(x, dtype=float)
    total = np.ones_like(x)
    comp = np.zeros_like(x)
    term = np.ones_like(x)
    for d in range(1, int(D) + 1):
        term = term * x / d
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return float(total) if total.ndim == 0 else total


def exp_trunc_log(x: float, D: int) -> tuple[float, float]:
    """``(log|exp_trunc(x, D)|, sign)`` without overflow.

    Positive and negative terms are summed separately in log domain; when they
    nearly cancel the result carries the usual cancellation error.
    """
    if D < 0:
        raise ValueError("D must be >= 0")
    if x == 0.0:
        return 0.0, 1.0
    d = np.arange(int(D) + 1)
    logs = d * math.log(abs(x)) - gammaln(d + 1)
    if x > 0:
        return float(logsumexp(logs)), 1.0
    pos = logsumexp(logs[d % 2 == 0])
    neg = logsumexp(logs[d % 2 == 1]) if D >= 1 else -np.inf
    if pos == neg:
        return -math.inf, 0.0
    hi, lo = max(pos, neg), min(pos, neg)
    return float(hi + math.log1p(-math.exp(lo - hi))), (1.0 if pos > neg else -1.0)


@dataclass(frozen=True)
class CriterionPoint:
    criterion: Criterion
    D: float | None
    lam: float
    value: float
    delta_used: float | None = None
    log_value: float | None = None
    overflow: bool = False


@dataclass
class CriterionCurve:
    points: list[CriterionPoint] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        rows = [
            (p.criterion, p.D, p.lam, p.delta_used, p.value)
            for p in self.points
        ]
        return _io.csv_text(["criterion", "D", "lambda", "delta", "value"], rows)


def _log_weights(dist: OverlapDistribution) -> tuple[np.ndarray, np.ndarray]:
    vals, w = dist.values_and_weights()
    with np.errstate(divide="ignore"):
        return vals, np.log(w)


def _exp_point(criterion, dist, lam, D, mask=None, delta=None) -> CriterionPoint:
    vals, logw = _log_weights(dist)
    expo = lam * lam * vals
    if mask is not None:
        expo, logw = expo[mask], logw[mask]
    logv = float(logsumexp(logw + expo)) if len(expo) else -math.inf
    overflow = bool(len(expo)) and float(np.max(expo)) > OVERFLOW_EXPONENT
    value = math.exp(logv) if logv < 709.0 else math.inf
    return CriterionPoint(criterion, D, lam, value, delta, logv, overflow)


def ld(dist: OverlapDistribution, D: int, lam: float) -> CriterionPoint:
    """``E exp_trunc(lam^2 s, D)``."""
    if D < 0 or int(D) != D:
        raise ValueError("LD needs a non-negative integer D")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    vals, w = dist.values_and_weights()
    terms = exp_trunc(lam * lam * vals, int(D))
    value = math.fsum(np.atleast_1d(w * terms))
    logv = math.log(value) if value > 0 else None
    return CriterionPoint("LD", int(D), lam, value, None, logv)


def lo(dist: OverlapDistribution, delta: float, lam: float) -> CriterionPoint:
    """Low-overlap likelihood norm ``E[1{|s| <= delta} exp(lam^2 s)]``."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    vals, _ = dist.values_and_weights()
    mask = np.abs(vals) <= delta + _INDICATOR_TOL * max(1.0, delta)
    return _exp_point("LO", dist, lam, None, mask=mask, delta=delta)


def fp(dist: OverlapDistribution, D: float, lam: float) -> CriterionPoint:
    """Franz-Parisi criterion: ``LO`` at the deviation threshold ``delta(D)``."""
    delta = delta_of_D(dist, D).delta
    point = lo(dist, delta, lam)
    return CriterionPoint("FP", D, lam, point.value, delta, point.log_value, point.overflow)


def chi2_plus_one(dist: OverlapDistribution, lam: float) -> CriterionPoint:
    """``E exp(lam^2 s)``; ``overflow`` flags ``lam^2 max s > 700``."""
    return _exp_point("CHI2", dist, lam, None)


# ---------------------------------------------------------------------------
# equivalence checks


@dataclass(frozen=True)
class EquivalenceReport:
    D: int
    lam: float
    M: float
    lhs: float
    rhs: float
    D_tilde: float
    holds: bool
    status: Literal["holds", "tie", "violated"]


def d_tilde(D: float, lam: float, M: float) -> float:
    return D * (2.0 + math.log1p(lam * lam * M))


def _classify(lhs: float, rhs: float) -> str:
    if lhs <= rhs * (1.0 + HOLD_SLACK) or not math.isfinite(rhs):
        return "holds"
    if lhs <= rhs * (1.0 + TIE_SLACK):
        return "tie"
    return "violated"


def equiv_easy_check(
    dist: OverlapDistribution, D: int, lam: float, M: float | None = None
) -> EquivalenceReport:
    """Check ``LD(D, lam) <= FP(D~, lam) + e^-D`` with ``D~ = D (2 + log(1 + lam^2 M))``."""
    if D < 1 or D % 2 == 0:
        raise ValueError("equiv_easy_check needs an odd D >= 1")
    M = dist.max_norm_sq if M is None else M
    if M is None:
        raise ValueError("max squared norm M is unknown; pass it explicitly")
    Dt = d_tilde(D, lam, M)
    lhs = ld(dist, D, lam).value
    rhs = fp(dist, Dt, lam).value + math.exp(-D)
    status = _classify(lhs, rhs)
    if status == "violated":
        log.warning("FP-to-LD inequality violated: D=%s lam=%s lhs=%r rhs=%r", D, lam, lhs, rhs)
    return EquivalenceReport(D, lam, M, lhs, rhs, Dt, status == "holds", status)


@dataclass(frozen=True)
class HardEquivalenceReport:
    D: int
    lam: float
    eps: float
    ld_val: float
    fp_val: float
    premise_bound: float
    premise_holds: bool
    conclusion_holds: bool | None


def equiv_hard_check(
    dist: OverlapDistribution, D: int, lam: float, eps: float
) -> HardEquivalenceReport:
    """Evaluate the LD-to-FP implication at a finite even ``D``.

    Premise: ``LD(D, (1+eps) lam) <= (1+eps)^D / (e D)``.
    Conclusion: ``FP(D, lam) <= LD(D, (1+eps) lam) + eps``.
    The implication is only claimed for ``D`` beyond an unspecified
    ``D0(eps)``, so failures are logged rather than raised. The conclusion is
    ``None`` whenever the premise fails.
    """
    if D < 2 or D % 2:
        raise ValueError("equiv_hard_check needs an even D >= 2")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    ld_val = ld(dist, D, (1.0 + eps) * lam).value
    fp_val = fp(dist, D, lam).value
    bound = (1.0 + eps) ** D / (math.e * D)
    premise = ld_val <= bound
    conclusion = None
    if premise:
        conclusion = _classify(fp_val, ld_val + eps) != "violated"
        if not conclusion:
            log.warning(
                "LD-to-FP conclusion failed at D=%s lam=%s eps=%s (D may be below D0)", D, lam, eps
            )
    return HardEquivalenceReport(D, lam, eps, ld_val, fp_val, bound, premise, conclusion)


_EVALUATORS = {
    "LD": lambda dist, D, lam: ld(dist, int(D), lam),
    "FP": fp,
    "LO": lambda dist, D, lam: lo(dist, D, lam),
    "CHI2": lambda dist, D, lam: chi2_plus_one(dist, lam),
}


def curve_scan(
    dist: OverlapDistribution,
    criterion: Criterion,
    D_grid: Sequence[float],
    lam_grid: Sequence[float],
) -> CriterionCurve:
    """Evaluate ``criterion`` on the grid, rows sorted by ``(lambda, D)``.

    For ``LO`` the ``D`` column is read as the overlap cutoff ``delta``.
    """
    try:
        fn = _EVALUATORS[criterion]
    except KeyError:
        raise ValueError(f"unknown criterion {criterion!r}") from None
    points = []
    for lam in sorted(lam_grid):
        for D in sorted(D_grid):
            p = fn(dist, D, lam)
            if criterion == "LO":
                p = CriterionPoint("LO", D, lam, p.value, p.delta_used, p.log_value, p.overflow)
            points.append(p)
    return CriterionCurve(points, {"criterion": criterion})
