import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpld import criteria
from fpld.criteria import chi2_plus_one, curve_scan, equiv_easy_check, equiv_hard_check, exp_trunc, fp, ld, lo
from fpld.priors import CustomSampler, SparseBinary, SparseRademacher, exact_distribution, overlap_distribution, wigner_surrogate

# Frozen from exhaustive enumeration of all 120^2 pairs of 3-subsets of [10].
LO_SB10_DELTA2 = 3.011849443920529
CHI2_SB10 = 3.1792289182804256


@pytest.fixture(scope="module")
def sb10():
    return overlap_distribution(SparseBinary(10, 3))


@pytest.fixture(scope="module")
def point():
    return overlap_distribution(CustomSampler(2, "unit_point_mass"))


def test_exp_trunc_examples():
    assert exp_trunc(0.0, 7) == 1.0
    assert exp_trunc(-3.0, 2) == 2.5
    assert exp_trunc(1.0, 3) == pytest.approx(8 / 3, abs=1e-15)
    assert np.allclose(exp_trunc(np.array([0.0, 1.0]), 1), [1.0, 2.0])


def test_exp_trunc_large_degree_is_exp():
    assert exp_trunc(5.0, 80) == pytest.approx(math.exp(5.0), rel=1e-14)
    assert exp_trunc(-5.0, 80) == pytest.approx(math.exp(-5.0), rel=1e-9)


def test_exp_trunc_log_matches_direct():
    for x, D in [(2.0, 5), (-1.5, 7), (-40.0, 70), (40.0, 100)]:
        logv, sign = criteria.exp_trunc_log(x, D)
        direct = exp_trunc(x, D)
        assert sign == np.sign(direct)
        assert logv == pytest.approx(math.log(abs(direct)), rel=1e-9, abs=1e-9)
    logv, sign = criteria.exp_trunc_log(1000.0, 500)
    assert sign == 1.0 and math.isfinite(logv) and logv > 700


def test_ld_examples(sb10, point):
    assert ld(point, 2, 1.0).value == 2.5
    assert ld(sb10, 5, 0.0).value == 1.0
    assert ld(sb10, 1, 1.0).value == pytest.approx(1.9, abs=1e-14)
    with pytest.raises(ValueError):
        ld(sb10, 1.5, 1.0)


def test_lo_examples(sb10):
    assert lo(sb10, 3, 0.7).value == pytest.approx(chi2_plus_one(sb10, 0.7).value, rel=1e-14)
    assert lo(sb10, 1, 0.0).value == pytest.approx(98 / 120, abs=1e-15)
    assert lo(sb10, 2, 1.0).value == pytest.approx(LO_SB10_DELTA2, rel=1e-14)
    e = math.e
    assert LO_SB10_DELTA2 == pytest.approx((35 + 63 * e + 21 * e * e) / 120, rel=1e-15)


def test_fp_examples(sb10):
    p = fp(sb10, 2, 1.0)
    assert p.delta_used == 2
    assert p.value == pytest.approx(LO_SB10_DELTA2, rel=1e-14)
    assert fp(sb10, 100, 1.0).value == pytest.approx(chi2_plus_one(sb10, 1.0).value, rel=1e-14)
    assert fp(sb10, 2, 0.0).value == pytest.approx(119 / 120, abs=1e-15)
    assert fp(sb10, 2.5, 1.0).delta_used == 2


def test_chi2_examples(sb10, point):
    assert chi2_plus_one(sb10, 0.0).value == 1.0
    assert chi2_plus_one(point, 1.0).value == pytest.approx(math.e, rel=1e-15)
    assert chi2_plus_one(sb10, 1.0).value == pytest.approx(CHI2_SB10, rel=1e-14)


def test_chi2_overflow_flag():
    dist = exact_distribution([0.0, 1000.0], [0.5, 0.5])
    p = chi2_plus_one(dist, 1.0)
    assert p.overflow and p.value == math.inf
    assert p.log_value == pytest.approx(1000 + math.log(0.5))


def test_equiv_easy_examples(point):
    r = equiv_easy_check(point, 1, 1.0)
    assert r.lhs == 2.0
    assert r.rhs == pytest.approx(math.e + math.exp(-1))
    assert r.holds
    r0 = equiv_easy_check(point, 1, 0.0)
    assert r0.lhs == 1.0 and r0.rhs == pytest.approx(1 + math.exp(-1)) and r0.holds
    rw = equiv_easy_check(wigner_surrogate(100, 0.3), 3, 0.8)
    assert rw.holds


def test_equiv_easy_errors(sb10):
    with pytest.raises(ValueError):
        equiv_easy_check(sb10, 2, 1.0)
    emp = overlap_distribution(SparseBinary(10, 3), "empirical", 10)
    emp = type(emp)("empirical", samples=emp.samples)
    with pytest.raises(ValueError):
        equiv_easy_check(emp, 1, 1.0)


def test_equiv_hard_examples(point):
    r0 = equiv_hard_check(overlap_distribution(SparseBinary(30, 3)), 20, 0.0, 0.5)
    assert r0.premise_holds and r0.conclusion_holds
    r = equiv_hard_check(point, 8, 0.5, 0.5)
    assert r.ld_val == pytest.approx(exp_trunc(0.75**2, 8), rel=1e-14)
    assert r.fp_val == pytest.approx(math.exp(0.25), rel=1e-14)
    assert r.premise_bound == pytest.approx(1.5**8 / (8 * math.e))
    assert r.premise_holds == (r.ld_val <= r.premise_bound)
    r3 = equiv_hard_check(overlap_distribution(SparseBinary(30, 3)), 8, 0.4, 0.3)
    assert r3.ld_val >= 1.0 and r3.fp_val >= 0.0
    with pytest.raises(ValueError):
        equiv_hard_check(point, 3, 0.5, 0.5)


def test_curve_scan_rows_sorted(sb10):
    curve = curve_scan(sb10, "FP", [2, 100], [1.0, 0.0])
    assert [(p.lam, p.D) for p in curve.points] == [(0.0, 2), (0.0, 100), (1.0, 2), (1.0, 100)]
    assert curve.points[2].value == pytest.approx(LO_SB10_DELTA2, rel=1e-14)
    text = curve.to_csv()
    assert text.splitlines()[0] == "criterion,D,lambda,delta,value"
    with pytest.raises(ValueError):
        curve_scan(sb10, "XX", [1], [1])


# ---------------------------------------------------------------------------
# properties

@st.composite
def exact_dists(draw):
    size = draw(st.integers(1, 6))
    # Laws of inner products of i.i.d. vectors: build from random vector atoms.
    dim = draw(st.integers(1, 3))
    vecs = np.array(draw(st.lists(st.lists(st.floats(-1.5, 1.5), min_size=dim, max_size=dim),
                                  min_size=size, max_size=size)))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=size, max_size=size)))
    w = w / w.sum()
    M = float(np.max(np.sum(vecs**2, axis=1)))
    return exact_distribution((vecs @ vecs.T).ravel(), np.outer(w, w).ravel(), max_norm_sq=M)


@settings(max_examples=80, deadline=None)
@given(exact_dists(), st.floats(0, 2), st.integers(0, 10))
def test_monotone_in_D(dist, lam, D):
    assert ld(dist, D + 1, lam).value >= ld(dist, D, lam).value - 1e-12
    assert fp(dist, D + 0.5, lam).value >= fp(dist, D, lam).value - 1e-12


@settings(max_examples=80, deadline=None)
@given(exact_dists(), st.floats(0, 2), st.floats(0, 2), st.integers(0, 10))
def test_ld_monotone_in_lambda(dist, l1, l2, D):
    lo_, hi_ = sorted((l1, l2))
    assert ld(dist, D, hi_).value >= ld(dist, D, lo_).value * (1 - 1e-12) - 1e-12


@settings(max_examples=80, deadline=None)
@given(exact_dists(), st.floats(0, 2), st.integers(0, 10))
def test_ld_lower_bound_and_fp_below_chi2(dist, lam, D):
    assert ld(dist, D, lam).value >= 1 - 1e-12
    chi = chi2_plus_one(dist, lam).value
    assert fp(dist, D, lam).value <= chi * (1 + 1e-12) + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(-30, 30), st.integers(0, 40))
def test_exp_trunc_sign(x, D):
    v = exp_trunc(x, D)
    if D % 2:
        assert v <= math.exp(x) * (1 + 1e-12) + 1e-12
    else:
        assert v >= -1e-12 * max(1.0, abs(x)) ** D / math.factorial(D)


@settings(max_examples=80, deadline=None)
@given(exact_dists(), st.floats(0, 2), st.sampled_from([1, 3, 5, 7]))
def test_equiv_easy_holds(dist, lam, D):
    assert equiv_easy_check(dist, D, lam).status != "violated"
