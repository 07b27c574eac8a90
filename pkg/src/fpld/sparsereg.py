"""Sparse linear regression: instances, the counting test, thresholded recovery,
and the supporting tail lemmas.

Planted model: ``Y = (k + sigma^2)^(-1/2) (X u + W)`` with ``X`` an
``m x n`` standard Gaussian design, ``u`` a uniformly random ``k``-sparse
binary vector and ``W ~ N(0, sigma^2 I_m)``. Null model: ``X`` and ``Y``
independent standard Gaussians. Both give ``Y ~ N(0, I_m)`` marginally.
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.special import ndtr

from . import _io
from .rng import stream

Label = Literal["null", "planted"]
EXHAUSTIVE_MAX_K = 24
ETA_FRACTION = 0.05
ETA_FLOOR = 1e-3


@dataclass(frozen=True)
class SRParams:
    n: int
    k: int
    m: int
    sigma2: float
    theta: float | None = None
    R: float | None = None

    def __post_init__(self):
        if not (1 <= self.k <= self.n):
            raise ValueError("need 1 <= k <= n")
        if self.m < 1:
            raise ValueError("need m >= 1")
        if not self.sigma2 > 0:
            raise ValueError("sigma^2 must be positive")

    @property
    def realized_theta(self) -> float:
        return math.log(self.k) / math.log(self.n)

    @property
    def realized_R(self) -> float:
        th = self.realized_theta
        return self.m / ((1.0 - th) * self.k * math.log(self.n))


def default_sigma2(k: int) -> float:
    """``k / log k`` (which is ``o(k)``); ``1`` when ``k = 1``."""
    return k / math.log(k) if k > 1 else 1.0


def params_from_scaling(n: int, theta: float, R: float, sigma2: float | None = None) -> SRParams:
    """``k = round(n^theta)``, ``m = round(R (1 - theta) k log n)``."""
    if not (0 < theta < 1) or R <= 0:
        raise ValueError("need theta in (0, 1) and R > 0")
    k = max(1, round(n**theta))
    m = max(1, round(R * (1.0 - theta) * k * math.log(n)))
    return SRParams(n, k, m, default_sigma2(k) if sigma2 is None else sigma2, theta, R)


@dataclass
class SRInstance:
    params: SRParams
    X: np.ndarray
    Y: np.ndarray
    u: np.ndarray | None
    label: Label
    seed: int


def sample(params: SRParams, planted: bool, seed: int) -> SRInstance:
    """Draw an instance; the stream depends on ``(seed, label)``."""
    label: Label = "planted" if planted else "null"
    rng = stream(seed, f"sr-{label}")
    n, k, m = params.n, params.k, params.m
    X = rng.standard_normal((m, n))
    if not planted:
        return SRInstance(params, X, rng.standard_normal(m), None, label, seed)
    support = rng.choice(n, size=k, replace=False)
    u = np.zeros(n, dtype=np.uint8)
    u[support] = 1
    W = math.sqrt(params.sigma2) * rng.standard_normal(m)
    Y = (X[:, np.sort(support)].sum(axis=1) + W) / math.sqrt(k + params.sigma2)
    return SRInstance(params, X, Y, u, label, seed)


def q_of_tau(tau: float) -> float:
    """``P(N(0,1) >= tau)``."""
    return float(ndtr(-tau))


def r_ld(theta: float) -> float:
    """Low-degree phase boundary ``R_LD(theta)``."""
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0, 1)")
    if theta < 0.25:
        r = math.sqrt(theta)
        return 2.0 * (1.0 - r) / (1.0 + r)
    if theta < 0.5:
        return (1.0 - 2.0 * theta) / (1.0 - theta)
    return 0.0


def _slacks(theta: float, R: float, c: float, ct: float) -> tuple[float, float, float, float]:
    s = math.sqrt(R * (1.0 - theta))
    return (
        min(ct, c - ct),
        theta - ct * ct / 2.0 - (1.0 - c * c / 2.0) / 2.0,
        theta - ct * ct / 2.0,
        s + ct - c,
    )


def conditions_hold(theta: float, R: float, c: float, ct: float) -> bool:
    """Conditions (i)-(iv) on ``(c, c~)``, all strict."""
    return all(x > 0 for x in _slacks(theta, R, c, ct))


def _pair(theta: float, R: float, eta: float) -> tuple[float, float]:
    s = math.sqrt(R * (1.0 - theta))
    if R > 2.0 * (1.0 - math.sqrt(theta)) / (1.0 + math.sqrt(theta)):
        return s + math.sqrt(2.0 * theta) - 2.0 * eta, math.sqrt(2.0 * theta) - eta
    return 2.0 * s - eta, s


def choose_constants(theta: float, R: float) -> tuple[float, float]:
    """Return ``(c, c~)`` satisfying (i)-(iv) strictly.

    ``eta`` starts at ``5%`` of the smallest nonzero slack of the ``eta = 0``
    pair (floored at ``1e-3``) and is halved until every condition is strict.
    """
    if R <= r_ld(theta):
        raise ValueError(f"R={R} does not exceed R_LD({theta})={r_ld(theta)}")
    slack0 = [abs(x) for x in _slacks(theta, R, *_pair(theta, R, 0.0)) if abs(x) > 1e-14]
    eta = max(ETA_FLOOR, ETA_FRACTION * min(slack0)) if slack0 else ETA_FLOOR
    for _ in range(200):
        c, ct = _pair(theta, R, eta)
        if conditions_hold(theta, R, c, ct):
            return c, ct
        eta /= 2.0
    raise ArithmeticError("no admissible (c, c~) found")


def column_scores(instance: SRInstance) -> np.ndarray:
    """``<X_j, Y> / ||Y||`` for every column."""
    norm = float(np.linalg.norm(instance.Y))
    if norm == 0.0:
        raise ValueError("degenerate instance: ||Y|| = 0")
    return instance.Y @ instance.X / norm


@dataclass(frozen=True)
class DetectReport:
    tau: float
    c: float
    T_value: int
    null_mean: float
    null_sd: float
    threshold: float
    decision: Label


def detect(
    instance: SRInstance, theta: float, R: float, tau: float | None = None
) -> DetectReport:
    """Count columns with score ``>= tau`` and compare against ``qn + 3 sqrt(qn(1 - q))``."""
    n = instance.params.n
    c = choose_constants(theta, R)[0]
    if tau is None:
        tau = c * math.sqrt(math.log(n))
    T = int(np.count_nonzero(column_scores(instance) >= tau))
    q = q_of_tau(tau)
    mean, sd = q * n, math.sqrt(q * n * (1.0 - q))
    thr = mean + 3.0 * sd
    return DetectReport(tau, c, T, mean, sd, thr, "planted" if T > thr else "null")


def recovery_c(theta: float, R: float) -> float:
    """Midpoint of ``(sqrt(2(1 - theta)), sqrt(R(1 - theta)))``."""
    if R <= 2.0:
        raise ValueError("recovery needs R > 2")
    return 0.5 * (math.sqrt(2.0 * (1.0 - theta)) + math.sqrt(R * (1.0 - theta)))


@dataclass(frozen=True)
class RecoverReport:
    c: float
    tau: float
    u_hat: np.ndarray
    false_positives: int
    false_negatives: int

    @property
    def errors(self) -> int:
        return self.false_positives + self.false_negatives


def recover(instance: SRInstance, theta: float, R: float) -> RecoverReport:
    if instance.u is None:
        raise ValueError("recovery needs a planted instance")
    c = recovery_c(theta, R)
    tau = c * math.sqrt(math.log(instance.params.n))
    u_hat = (column_scores(instance) >= tau).astype(np.uint8)
    u = instance.u.astype(bool)
    fp = int(np.count_nonzero(u_hat.astype(bool) & ~u))
    fn = int(np.count_nonzero(~u_hat.astype(bool) & u))
    return RecoverReport(c, tau, u_hat, fp, fn)


# ---------------------------------------------------------------------------
# trial drivers


def _map(fn: Callable[[int], object], count: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def trial_seed(seed: int, tag: str, index: int) -> int:
    return int(stream(seed, tag, index).integers(0, 2**63))


@dataclass(frozen=True)
class DetectionTrials:
    trials: int
    rate: float
    mean_T: float
    reports: tuple[DetectReport, ...]


def detection_trials(
    params: SRParams, planted: bool, theta: float, R: float, trials: int, seed: int,
    threads: int = 1,
) -> DetectionTrials:
    tag = "trials-planted" if planted else "trials-null"

    def one(i):
        return detect(sample(params, planted, trial_seed(seed, tag, i)), theta, R)

    reps = _map(one, trials, threads)
    rate = sum(r.decision == "planted" for r in reps) / trials
    return DetectionTrials(trials, rate, float(np.mean([r.T_value for r in reps])), tuple(reps))


def recovery_trials(
    params: SRParams, theta: float, R: float, trials: int, seed: int, threads: int = 1
) -> list[RecoverReport]:
    def one(i):
        return recover(sample(params, True, trial_seed(seed, "trials-recover", i)), theta, R)

    return _map(one, trials, threads)


def phase_map(
    n: int, thetas: Sequence[float], Rs: Sequence[float], trials: int, seed: int,
    threads: int = 1,
) -> list[tuple]:
    """Rows ``(theta, R, power, fpr, trials)``; cells with ``R <= R_LD`` are skipped."""
    rows = []
    for i, th in enumerate(sorted(thetas)):
        for j, R in enumerate(sorted(Rs)):
            if R <= r_ld(th):
                continue
            p = params_from_scaling(n, th, R)
            cell = trial_seed(seed, "phase-cell", i * len(Rs) + j)
            power = detection_trials(p, True, th, R, trials, cell, threads).rate
            fpr = detection_trials(p, False, th, R, trials, cell, threads).rate
            rows.append((th, R, power, fpr, trials))
    return rows


def phase_map_csv(rows) -> str:
    return _io.csv_text(["theta", "R", "power", "fpr", "trials"], rows)


# ---------------------------------------------------------------------------
# good event


def good_event_t(ell: int, k: int) -> float:
    return math.log(2.0**ell * math.comb(k, ell) * math.log(k))


def good_event_delta(ell: int, k: int, m: int) -> float:
    """``Delta(ell) = sqrt(2 m t) + 10 t`` with ``t = log(2^ell C(k, ell) log k)``."""
    t = good_event_t(ell, k)
    return math.sqrt(2.0 * m * t) + 10.0 * t


@dataclass(frozen=True)
class GoodEventResult:
    holds: bool
    worst_margin: float
    subsets_checked: int


def _subset_rows(k: int, ell: int, chunk: int = 200_000):
    buf = []
    for S in itertools.combinations(range(k), ell):
        buf.append(S)
        if len(buf) == chunk:
            yield np.array(buf)
            buf = []
    if buf:
        yield np.array(buf)


def good_event_check(
    X: np.ndarray, u: np.ndarray, mode: Literal["exhaustive", "audit"] = "exhaustive",
    audit_subsets: int = 2000, seed: int = 0,
) -> GoodEventResult:
    """Check ``<sum_S X_j / sqrt(l), sum_{supp \\ S} X_j / sqrt(k - l)> <= Delta(l)``.

    Exhaustive mode enumerates every ``S`` with ``1 <= |S| <= k/2`` (``k <= 24``).
    Audit mode draws ``audit_subsets`` random subsets per level instead, so a
    ``True`` result there is only a spot check. ``worst_margin`` is the
    smallest ``Delta(l) - value`` seen.
    """
    support = np.nonzero(np.asarray(u))[0]
    k, m = len(support), X.shape[0]
    if k < 2:
        raise ValueError("good event needs k >= 2")
    if mode == "exhaustive" and k > EXHAUSTIVE_MAX_K:
        raise ValueError(f"exhaustive mode is capped at k={EXHAUSTIVE_MAX_K}")
    cols = X[:, support]
    G = cols.T @ cols
    rowsum = G.sum(axis=1)
    worst, count = math.inf, 0
    rng = stream(seed, "good-event-audit")
    for ell in range(1, k // 2 + 1):
        bound = good_event_delta(ell, k, m)
        if mode == "exhaustive":
            batches = _subset_rows(k, ell)
        else:
            batches = [np.array([np.sort(rng.choice(k, ell, replace=False)) for _ in range(audit_subsets)])]
        for rows in batches:
            ind = np.zeros((len(rows), k))
            np.put_along_axis(ind, rows, 1.0, axis=1)
            # 1_S^T G 1_{S^c} = 1_S^T (G 1) - 1_S^T G 1_S
            inside = np.einsum("ij,jk,ik->i", ind, G, ind)
            cross = ind @ rowsum - inside
            vals = cross / math.sqrt(ell * (k - ell))
            worst = min(worst, float(np.min(bound - vals)))
            count += len(rows)
    return GoodEventResult(worst > 0, worst, count)


def good_event_rate(k: int, m: int, trials: int, seed: int) -> float:
    """Fraction of draws (only the ``k`` support columns matter) where the event holds."""
    u = np.ones(k)
    hits = 0
    for i in range(trials):
        X = stream(seed, "good-event", i).standard_normal((m, k))
        hits += good_event_check(X, u).holds
    return hits / trials


# ---------------------------------------------------------------------------
# tail lemmas


def hypergeom_pmf_exact(n: int, k: int, ell: int) -> Fraction:
    return Fraction(math.comb(k, ell) * math.comb(n - k, k - ell), math.comb(n, k))


def hypergeom_tail_check(n: int, k: int) -> bool:
    """Both hypergeometric bounds, in exact rational arithmetic, for all ``1 <= l <= k``.

    ``P(= l) <= (k^2/(n-k))^l``, and when ``k^2/(n-k) <= 1`` also
    ``P(>= l) <= k (k^2/(n-k))^l``. With ``n = k`` the ratio is infinite and
    both bounds hold vacuously.
    """
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    if n == k:
        return True
    r = Fraction(k * k, n - k)
    pmf = [hypergeom_pmf_exact(n, k, ell) for ell in range(k + 1)]
    for ell in range(1, k + 1):
        if pmf[ell] > r**ell:
            return False
        if r <= 1 and sum(pmf[ell:]) > k * r**ell:
            return False
    return True


@dataclass(frozen=True)
class BernsteinCheck:
    upper_frac: float
    lower_frac: float
    bound: float
    allowed: float
    upper_threshold: float
    lower_threshold: float
    holds: bool


def bernstein_gg_tail_check(
    a: float, b: float, n_terms: int, y: float, trials: int, seed: int
) -> BernsteinCheck:
    """Empirical two-sided tails of ``sum_i (a g_i^2 + b g_i g_i')`` against ``e^-y``."""
    if trials < 10_000:
        raise ValueError("need at least 1e4 trials")
    dev = math.sqrt(2.0 * (3 * a * a + b * b) * n_terms * y) + 10.0 * math.sqrt(a * a + b * b) * y
    hi, lo = a * n_terms + dev, a * n_terms - dev
    up = down = 0
    chunk = max(1, 4_000_000 // n_terms)
    for start in range(0, trials, chunk):
        size = min(chunk, trials - start)
        rng = stream(seed, "bernstein", start // chunk)
        g = rng.standard_normal((size, n_terms))
        h = rng.standard_normal((size, n_terms))
        s = np.sum(a * g * g + b * g * h, axis=1)
        up += int(np.count_nonzero(s >= hi))
        down += int(np.count_nonzero(s <= lo))
    p = math.exp(-y)
    allowed = p + 3.0 * math.sqrt(p * (1.0 - p) / trials)
    fu, fl = up / trials, down / trials
    return BernsteinCheck(fu, fl, p, allowed, hi, lo, fu <= allowed and fl <= allowed)


@dataclass(frozen=True)
class Separation:
    mean_P: float
    mean_Q: float
    var_P: float
    var_Q: float
    ratio: float
    label: str


def empirical_separation(
    statistic: Callable[[object], float],
    sampler_P: Callable[[int], object],
    sampler_Q: Callable[[int], object],
    trials: int,
    seed: int,
    strong_cutoff: float = 0.1,
    weak_cutoff: float = 1.0,
) -> Separation:
    """``ratio = sqrt(max(var_P, var_Q)) / |mean_P - mean_Q|``.

    Samplers take an integer seed. The label is ``strong`` when the ratio is
    at most ``strong_cutoff``, ``weak`` up to ``weak_cutoff``, else ``none``.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    P = np.array([statistic(sampler_P(trial_seed(seed, "sep-P", i))) for i in range(trials)], float)
    Q = np.array([statistic(sampler_Q(trial_seed(seed, "sep-Q", i))) for i in range(trials)], float)
    mp, mq, vp, vq = P.mean(), Q.mean(), P.var(ddof=1), Q.var(ddof=1)
    gap = abs(mp - mq)
    ratio = math.sqrt(max(vp, vq)) / gap if gap > 0 else math.inf
    label = "strong" if ratio <= strong_cutoff else "weak" if ratio <= weak_cutoff else "none"
    return Separation(float(mp), float(mq), float(vp), float(vq), ratio, label)


# ---------------------------------------------------------------------------
# instance files

MAGIC = b"FPLDSR01"
_HEADER = struct.Struct("<8sqqqdqq")


def write_instance(path: str | Path, inst: SRInstance) -> None:
    """Binary layout: magic, ``n, k, m, sigma2, label, seed`` (little endian),
    then ``X`` row-major float64, ``Y`` float64, ``u`` uint8; plus ``.json`` sidecar."""
    p = inst.params
    path = Path(path)
    u = inst.u if inst.u is not None else np.zeros(p.n, np.uint8)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, p.n, p.k, p.m, p.sigma2, int(inst.label == "planted"), inst.seed))
        fh.write(np.ascontiguousarray(inst.X, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(inst.Y, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(u, dtype=np.uint8).tobytes())
    sidecar = {"params": asdict(p), "label": inst.label, "seed": inst.seed, "format": MAGIC.decode()}
    path.with_name(path.name + ".json").write_text(_io.json_text(sidecar), encoding="utf-8")


def read_instance(path: str | Path) -> SRInstance:
    path = Path(path)
    raw = path.read_bytes()
    magic, n, k, m, s2, lab, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not an instance file")
    off = _HEADER.size
    X = np.frombuffer(raw, "<f8", m * n, off).reshape(m, n).copy()
    off += 8 * m * n
    Y = np.frombuffer(raw, "<f8", m, off).copy()
    off += 8 * m
    u = np.frombuffer(raw, np.uint8, n, off).copy()
    side = path.with_name(path.name + ".json")
    extra = json.loads(side.read_text()) if side.exists() else {"params": {}}
    params = SRParams(n, k, m, s2, extra["params"].get("theta"), extra["params"].get("R"))
    planted = bool(lab)
    return SRInstance(params, X, Y, u if planted else None, "planted" if planted else "null", seed)
