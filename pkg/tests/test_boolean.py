import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpld import boolean
from fpld.boolean import (
    BiasVector,
    DenseSparseSpec,
    FiniteBiasPrior,
    IIDPrior,
    OverlapWindowEvent,
    boolean_inner,
    counterexample_prior,
    fp_biased_exact,
    ld_boolean,
    subsample_prior,
)
from fpld.priors import BiasedBoolean
from fpld.rng import stream

import oracles


def test_inner_examples():
    u = np.array([1.0, -1, 1, 1, -1])
    assert boolean_inner(u, u) == 32.0
    v = u.copy()
    v[2] = -1
    assert boolean_inner(u, v) == 0.0
    assert boolean_inner(np.full(3, 0.5), np.full(3, 0.5)) == 1.953125
    with pytest.raises(ValueError):
        boolean_inner(np.ones(2), np.ones(3))
    with pytest.raises(ValueError):
        BiasVector(np.array([2.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.data())
def test_inner_matches_cube_enumeration(n, data):
    vec = st.lists(st.floats(-1, 1), min_size=n, max_size=n)
    u, v = np.array(data.draw(vec)), np.array(data.draw(vec))
    value = boolean_inner(u, v)
    assert value >= 0
    assert value == pytest.approx(oracles.cube_inner(u, v), abs=1e-10)


def test_inner_matches_cube_enumeration_n12():
    rng = stream(0, "test")
    u, v = rng.uniform(-1, 1, 12), rng.uniform(-1, 1, 12)
    assert boolean_inner(u, v) == pytest.approx(oracles.cube_inner(u, v), abs=1e-10)


def test_ld_biased_degree_one():
    p = BiasedBoolean(50, 0.3, 0.2)
    assert ld_boolean(p, 1) == pytest.approx(1 + 50 * 0.09 * 0.04, rel=1e-14)
    assert ld_boolean(p, 0) == 1.0


@pytest.mark.parametrize("n,D", [(6, 2), (8, 3), (10, 4), (12, 4)])
def test_ld_closed_form_matches_subsets(n, D):
    prior = IIDPrior(n, (0.7, -0.4), (0.45, 0.55))
    fin = prior.enumerate()
    closed = ld_boolean(prior, D)
    assert closed == pytest.approx(oracles.ld_by_subsets(fin.vectors, fin.weights, D), rel=1e-10)


def test_ld_finite_prior_matches_subsets():
    rng = stream(1, "test")
    vecs = rng.uniform(-1, 1, (5, 6))
    w = rng.random(5)
    prior = FiniteBiasPrior(vecs, w)
    for D in range(5):
        assert ld_boolean(prior, D) == pytest.approx(
            oracles.ld_by_subsets(vecs, w / w.sum(), D), rel=1e-10
        )


def test_ld_mc_agrees():
    prior = IIDPrior(8, (0.6, -0.2), (0.5, 0.5))
    draw = lambda rng: np.where(rng.random(8) < 0.5, 0.6, -0.2)
    est, se = boolean.ld_boolean_mc(draw, 3, 20000, seed=2)
    assert abs(est - ld_boolean(prior, 3)) <= 4 * se


def test_fp_biased_against_mc():
    p = BiasedBoolean(20, 0.5, 0.3)
    exact = fp_biased_exact(p, 2)
    mc, se = boolean.fp_biased_mc(p, 2, 1_000_000, seed=0)
    assert abs(exact - mc) <= 3 * se


def test_fp_biased_tiny_eps_is_low_mass():
    r = boolean.fp_biased(BiasedBoolean(30, 1e-9, 0.4), 1.0)
    assert r.value == pytest.approx(r.low_mass, rel=1e-6)
    assert r.value <= 1.0


def test_fp_biased_matches_full_pair_law():
    # Dual route: brute-force the agreement count over all coordinate pairs for tiny n.
    import itertools

    p = BiasedBoolean(6, 0.5, 0.4)
    pp = (1 + p.bias) / 2
    D = 1.0
    law = {}
    for u in itertools.product([1, -1], repeat=6):
        for v in itertools.product([1, -1], repeat=6):
            w = math.prod(pp if x > 0 else 1 - pp for x in u + v)
            A = sum(a == b for a, b in zip(u, v))
            law[A] = law.get(A, 0.0) + w
    s = {A: p.eps**2 * (2 * A - 6) for A in law}
    mags = sorted({abs(x) for x in s.values()})
    tail = lambda t: sum(w for A, w in law.items() if abs(s[A]) >= t - 1e-12)
    delta = max(t for t in mags if tail(t) >= math.exp(-D))
    ref = sum(w * (1 + p.eps**2) ** A * (1 - p.eps**2) ** (6 - A)
              for A, w in law.items() if abs(s[A]) <= delta + 1e-12)
    r = boolean.fp_biased(p, D)
    assert r.delta == pytest.approx(delta)
    assert r.value == pytest.approx(ref, rel=1e-12)


def test_counterexample_regime():
    n, alpha = 4096, 0.05
    prior = counterexample_prior(n, alpha)
    ld1 = ld_boolean(prior, 1) - 1
    assert ld1 == pytest.approx(n * prior.eps**2 * prior.bias**2, rel=1e-12)
    assert ld1 == pytest.approx(n**0.3, rel=1e-12)
    D = math.floor(n**alpha)
    assert fp_biased_exact(prior, D) < 0.01 * ld1
    assert fp_biased_exact(prior, D) < 1


def test_sweep_csv():
    text = boolean.boolean_sweep(BiasedBoolean(20, 0.5, 0.3), [2, 1])
    lines = text.splitlines()
    assert lines[0] == "D,delta,fp,ld"
    assert lines[1].startswith("1,")


def test_dense_sparse_inner_examples():
    spec = DenseSparseSpec(10, 0.5, 0.5)
    S = np.zeros(10, bool)
    S[:2] = True
    T = np.zeros(10, bool)
    assert boolean.dense_sparse_inner(spec, (S, T), (S, T)) == pytest.approx(1.81)
    S2 = np.zeros(10, bool)
    S2[5:8] = True
    assert boolean.dense_sparse_inner(spec, (S, T), (S2, T)) == 1.0
    with pytest.raises(ValueError):
        boolean.dense_sparse_inner(spec, (S, S), (S, T))


def test_dense_sparse_ld1_against_mc():
    n = 400
    spec = DenseSparseSpec(n, n ** -0.1, 0.9)
    est, se = boolean.dense_sparse_ld1_mc(spec, 4000, seed=3)
    assert abs(est - boolean.dense_sparse_ld1(spec)) <= 3 * se


def test_dense_sparse_pruned_sets_disjoint():
    spec = DenseSparseSpec(200, 0.4, 0.8)
    S, T = boolean.dense_sparse_sample(spec, stream(0, "t"))
    assert not np.any(S & T)


def test_subsample_trivial_cases():
    draw = boolean.k_subset_sampler(50, 5)
    never = lambda x, y: False
    assert subsample_prior(draw, never, 30, seed=0).success
    assert subsample_prior(draw, lambda x, y: True, 1, seed=0).success


def test_subsample_batch_matches_pairwise():
    draw = boolean.k_subset_sampler(30, 5)
    ev = OverlapWindowEvent(2, 5)
    for rep in range(5):
        fast = subsample_prior(draw, ev, 12, seed=4, n=30, repeat=rep)
        slow = subsample_prior(draw, lambda x, y: ev(x, y), 12, seed=4, repeat=rep)
        assert fast.success == slow.success
        assert fast.offending == slow.offending


def test_subsample_planted_clique():
    from scipy.stats import hypergeom

    n, k = 10_000, 20
    lo = math.ceil(math.sqrt(k))
    delta = float(hypergeom(n, k, k).sf(lo - 1) - hypergeom(n, k, k).pmf(k))
    T = int(math.floor(math.sqrt(0.01 / delta)))
    ev = OverlapWindowEvent(lo, k)
    draw = boolean.k_subset_sampler(n, k)
    wins = sum(subsample_prior(draw, ev, T, seed=9, n=n, repeat=r).success for r in range(100))
    assert wins >= 99
