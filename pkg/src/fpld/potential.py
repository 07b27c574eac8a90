"""Annealed potential of the sparse-Rademacher spiked Wigner model.

``phi(x)`` maximizes an entropy-plus-prior objective over the fraction
``p0`` of coordinates where the two replicas disagree on support, subject to
the net correlation ``p1 - p_{-1} = x``, and adds the energy term
``lam^2 x^2 / (2 rho^2)``. The inner objective is strictly concave in ``p0``,
so its maximizer is found by bisection on the derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import _io

Landscape = Literal["GlobalMaxAtZero", "BarrierSeparatedMaxima", "LocalMinAtZero"]

BRACKET_PAD = 1e-15
BISECT_WIDTH = 1e-12
TIE_TOL = 1e-9
FD_STEP = 1e-3
# The Richardson-extrapolated second difference is accurate to ~1e-7 here.
CURVATURE_TOL = 1e-6


@dataclass(frozen=True)
class WignerParams:
    lam: float
    rho: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not (0.0 < self.rho <= 1.0):
            raise ValueError("rho must lie in (0, 1]")


def _xlogx(p: float) -> float:
    return p * math.log(p) if p > 0 else 0.0


def entropy(p: Sequence[float]) -> float:
    """Shannon entropy in nats, with ``0 log 0 = 0``."""
    p = [float(v) for v in p]
    if any(v < 0 for v in p):
        raise ValueError("probabilities must be non-negative")
    if abs(math.fsum(p) - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    return -math.fsum(_xlogx(v) for v in p)


def _split(p0: float, x: float) -> tuple[float, float, float]:
    """``(p_{-1}, p0, p1)`` with ``p1 - p_{-1} = x``."""
    return (1.0 - p0 - x) / 2.0, p0, (1.0 - p0 + x) / 2.0


def inner_objective(p0: float, x: float, rho: float) -> float:
    """Entropy plus prior log-weights at a given ``p0``."""
    pm, p0, pp = _split(p0, x)
    log_on = math.log(rho * rho / 2.0)
    out = -(_xlogx(pm) + _xlogx(p0) + _xlogx(pp)) + (1.0 - p0) * log_on
    if p0 > 0:
        out += p0 * math.log1p(-rho * rho)
    return out


def _slope(p0: float, x: float, rho: float) -> float:
    pm, p0, pp = _split(p0, x)
    return (
        -math.log(p0)
        + 0.5 * (math.log(pp) + math.log(pm))
        - math.log(rho * rho / 2.0)
        + math.log1p(-rho * rho)
    )


def _argmax_p0(x: float, rho: float) -> float:
    width = 1.0 - abs(x)
    if rho == 1.0 or width <= 2 * BRACKET_PAD:
        return 0.0
    lo, hi = BRACKET_PAD, width - BRACKET_PAD
    if _slope(hi, x, rho) >= 0:
        return hi
    if _slope(lo, x, rho) <= 0:
        return lo
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if _slope(mid, x, rho) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def phi(x: float, params: WignerParams) -> tuple[float, float]:
    """``(phi(x), p0_star)`` for ``|x| <= 1``."""
    if abs(x) > 1.0:
        raise ValueError("x must lie in [-1, 1]")
    rho = params.rho
    p0 = _argmax_p0(x, rho)
    energy = params.lam**2 * x * x / (2.0 * rho * rho)
    return inner_objective(p0, x, rho) + energy, p0


def curvature_at_zero(params: WignerParams, h: float = FD_STEP) -> float:
    """Second difference of ``phi`` at 0 with one Richardson step."""

    def second_diff(step):
        return (phi(step, params)[0] - 2.0 * phi(0.0, params)[0] + phi(-step, params)[0]) / step**2

    return (4.0 * second_diff(h / 2.0) - second_diff(h)) / 3.0


@dataclass
class PotentialCurve:
    params: WignerParams
    xs: np.ndarray
    values: np.ndarray
    maximizer_p0: np.ndarray
    classification: Landscape | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return _io.csv_text(["x", "phi", "p0_star"], zip(self.xs, self.values, self.maximizer_p0))

    def summary(self) -> dict:
        i = int(np.argmax(self.values))
        return {
            "lambda": self.params.lam,
            "rho": self.params.rho,
            "classification": self.classification,
            "grid_size": len(self.xs),
            "max_phi": float(self.values[i]),
            "argmax_x": float(self.xs[i]),
            **self.meta,
        }


def potential_curve(params: WignerParams, xs: Sequence[float] | int = 401) -> PotentialCurve:
    """Evaluate ``phi`` on ``xs`` (or on a uniform odd-sized grid of ``[-1, 1]``)."""
    if isinstance(xs, (int, np.integer)):
        xs = symmetric_grid(int(xs))
    xs = np.asarray(xs, dtype=float)
    pairs = [phi(float(x), params) for x in xs]
    return PotentialCurve(
        params, xs, np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])
    )


def symmetric_grid(size: int) -> np.ndarray:
    """Uniform grid on ``[-1, 1]`` containing 0 exactly (``size`` made odd)."""
    half = size // 2
    pos = np.arange(1, half + 1) / half
    return np.concatenate([-pos[::-1], [0.0], pos])


def classify_landscape(params: WignerParams, grid_size: int = 401) -> Landscape:
    """Shape of ``phi`` around the uninformative point ``x = 0``.

    * ``LocalMinAtZero``: 0 is not a local maximum (positive curvature, or
      ``phi > 0`` at the grid neighbours of 0).
    * ``GlobalMaxAtZero``: ``phi <= 0`` on the whole grid.
    * ``BarrierSeparatedMaxima``: 0 is a strict local maximum but ``phi``
      becomes positive further out, after dipping strictly below 0.
    """
    return _classify(potential_curve(params, grid_size), curvature_at_zero(params))


def _classify(curve: PotentialCurve, curvature: float) -> Landscape:
    xs, vals = curve.xs, curve.values
    if len(xs) < 201:
        raise ValueError("grid_size must be >= 201")
    if curvature > CURVATURE_TOL:
        return "LocalMinAtZero"
    zero = int(np.argmin(np.abs(xs)))
    neighbours = [vals[i] for i in (zero - 1, zero + 1) if 0 <= i < len(vals)]
    if max(neighbours) > TIE_TOL:
        return "LocalMinAtZero"
    if np.max(vals) <= TIE_TOL:
        return "GlobalMaxAtZero"
    best = int(np.argmax(vals))
    between = vals[min(zero, best) + 1 : max(zero, best)]
    if len(between) and np.min(between) < -TIE_TOL:
        return "BarrierSeparatedMaxima"
    return "LocalMinAtZero"


def landscape(params: WignerParams, grid_size: int = 401) -> PotentialCurve:
    """Curve plus classification and curvature in ``meta``."""
    curve = potential_curve(params, grid_size)
    curv = curvature_at_zero(params)
    curve.classification = _classify(curve, curv)
    curve.meta = {
        "curvature_fd": curv,
        "curvature_formula": (params.lam**2 - 1.0) / params.rho**2,
    }
    return curve
