import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpld import priors
from fpld.priors import (
    BiasedBoolean,
    CustomSampler,
    SparseBinary,
    SparseRademacher,
    TensorPower,
    delta_of_D,
    exact_distribution,
    moment,
    overlap_distribution,
    tail_prob,
)

import oracles


@pytest.fixture(scope="module")
def sb10():
    return overlap_distribution(SparseBinary(10, 3))


def test_sparse_binary_pmf(sb10):
    assert np.array_equal(sb10.support, [0, 1, 2, 3])
    assert np.allclose(sb10.pmf, np.array([35, 63, 21, 1]) / 120, rtol=0, atol=1e-15)


@pytest.mark.parametrize("n,k", [(6, 2), (8, 3), (10, 3), (12, 4)])
def test_sparse_binary_matches_pair_enumeration(n, k):
    dist = overlap_distribution(SparseBinary(n, k))
    ref = oracles.subset_pair_overlaps(n, k)
    assert np.array_equal(dist.support, list(ref))
    assert np.allclose(dist.pmf, list(ref.values()), rtol=0, atol=1e-14)


def test_point_mass():
    dist = overlap_distribution(CustomSampler(3, "unit_point_mass"))
    assert np.array_equal(dist.support, [1.0])
    assert dist.pmf[0] == 1.0
    assert dist.max_norm_sq == 1.0


def test_sparse_rademacher_n2():
    dist = overlap_distribution(SparseRademacher(2, 1.0))
    assert np.array_equal(dist.support, [-2, 0, 2])
    assert np.allclose(dist.pmf, [0.25, 0.5, 0.25])


def test_sparse_rademacher_small_n_by_enumeration():
    n, rho = 3, 0.6
    atoms = [-1 / math.sqrt(rho), 0.0, 1 / math.sqrt(rho)]
    probs = [rho / 2, 1 - rho, rho / 2]
    law = {}
    import itertools

    for u in itertools.product(range(3), repeat=n):
        for v in itertools.product(range(3), repeat=n):
            s = round(sum(atoms[a] * atoms[b] for a, b in zip(u, v)), 9)
            w = math.prod(probs[a] for a in u) * math.prod(probs[b] for b in v)
            law[s] = law.get(s, 0.0) + w
    dist = overlap_distribution(SparseRademacher(n, rho))
    ref = sorted((s, w) for s, w in law.items() if w > 0)
    assert np.allclose(dist.support, [s for s, _ in ref], atol=1e-9)
    assert np.allclose(dist.pmf, [w for _, w in ref], atol=1e-14)


def test_biased_boolean_law_mean():
    p = BiasedBoolean(20, 0.5, 0.3)
    dist = overlap_distribution(p)
    assert moment(dist, 1) == pytest.approx(20 * (0.5 * 0.3) ** 2, rel=1e-12)


def test_tensor_power_overlap_is_power():
    base = overlap_distribution(SparseRademacher(4, 0.5))
    tp = overlap_distribution(TensorPower(SparseRademacher(4, 0.5), 2))
    ref = exact_distribution(base.support**2, base.pmf)
    assert np.allclose(tp.support, ref.support)
    assert np.allclose(tp.pmf, ref.pmf)
    assert np.all(tp.support >= 0)


def test_tensor_power_empirical_uses_base_samples():
    prior = TensorPower(SparseBinary(20, 4), 3)
    emp = overlap_distribution(prior, "empirical", 500, seed=4)
    base = overlap_distribution(SparseBinary(20, 4), "empirical", 500, seed=4)
    assert np.array_equal(emp.samples, base.samples**3)


def test_empirical_is_reproducible():
    a = overlap_distribution(SparseRademacher(50, 0.3), "empirical", 1000, seed=11)
    b = overlap_distribution(SparseRademacher(50, 0.3), "empirical", 1000, seed=11)
    assert np.array_equal(a.samples, b.samples)


def test_errors():
    with pytest.raises(ValueError):
        SparseBinary(3, 4)
    with pytest.raises(ValueError):
        SparseRademacher(3, 0.0)
    with pytest.raises(ValueError):
        overlap_distribution(SparseBinary(10, 3), "empirical", 0)
    with pytest.raises(ValueError):
        overlap_distribution(SparseRademacher(5000, 0.5))


def test_delta_examples(sb10):
    assert delta_of_D(sb10, 2).delta == 2
    assert delta_of_D(sb10, 0).delta == 0
    assert delta_of_D(sb10, 1e6).delta == 3
    assert delta_of_D(sb10, math.inf).delta == 3


def test_tail_prob_examples(sb10):
    assert tail_prob(sb10, 1) == pytest.approx(85 / 120, abs=1e-15)
    assert tail_prob(sb10, 0) == 1.0
    assert tail_prob(sb10, 3.5) == 0.0


def test_moment_examples(sb10):
    assert moment(sb10, 1) == pytest.approx(0.9, abs=1e-15)
    assert moment(sb10, 0) == 1.0
    assert moment(overlap_distribution(SparseRademacher(2, 1.0)), 1) == 0.0


def test_json_round_trip():
    for p in [
        SparseBinary(10, 3),
        SparseRademacher(8, 0.4),
        TensorPower(SparseBinary(5, 2), 3),
        BiasedBoolean(7, 0.2, 0.1),
        CustomSampler(4, "unit_point_mass"),
    ]:
        assert priors.prior_from_json(priors.prior_to_json(p)) == p
    with pytest.raises(ValueError):
        priors.prior_from_dict({"kind": "sparse_binary", "n": 3, "k": 1, "extra": 0})


def test_wigner_surrogate_scaling():
    dist = priors.wigner_surrogate(10, 0.5)
    base = overlap_distribution(SparseRademacher(10, 0.5))
    assert moment(dist, 1) == pytest.approx(moment(base, 2) / 20, rel=1e-12)
    assert dist.max_norm_sq == pytest.approx(10 / (2 * 0.25))


# ---------------------------------------------------------------------------
# properties

exact_priors = st.one_of(
    st.builds(lambda n, k: SparseBinary(n, min(k, n)), st.integers(1, 40), st.integers(1, 10)),
    st.builds(SparseRademacher, st.integers(1, 60), st.floats(0.05, 1.0)),
    st.builds(BiasedBoolean, st.integers(1, 60), st.floats(0.05, 0.95), st.floats(0.05, 0.95)),
    st.builds(lambda n, r, p: TensorPower(SparseRademacher(n, r), p),
              st.integers(1, 20), st.floats(0.1, 1.0), st.integers(1, 4)),
)


@settings(max_examples=60, deadline=None)
@given(exact_priors)
def test_pmf_normalized_and_moments_nonnegative(prior):
    dist = overlap_distribution(prior)
    assert np.all((dist.pmf >= 0) & (dist.pmf <= 1))
    assert abs(math.fsum(dist.pmf) - 1) <= 1e-12
    assert np.all(np.diff(dist.support) > 0)
    for d in range(13):
        assert moment(dist, d) >= -1e-12


@settings(max_examples=60, deadline=None)
@given(exact_priors, st.floats(0, 30), st.floats(0, 30))
def test_delta_continuity_and_monotonicity(prior, D1, D2):
    dist = overlap_distribution(prior)
    lo, hi = sorted((D1, D2))
    d_lo, d_hi = delta_of_D(dist, lo).delta, delta_of_D(dist, hi).delta
    assert d_lo <= d_hi
    level = math.exp(-hi)
    assert tail_prob(dist, d_hi) >= level * (1 - 1e-12)
    above = float(dist.pmf[np.abs(dist.support) > d_hi * (1 + 1e-12) + 1e-12].sum())
    assert above <= level * (1 + 1e-12) + 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.floats(0.1, 1.0), st.sampled_from([2, 4]))
def test_even_tensor_power_nonnegative(n, rho, p):
    dist = overlap_distribution(TensorPower(SparseRademacher(n, rho), p))
    assert np.all(dist.support >= 0)
