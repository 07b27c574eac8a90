import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpld import potential
from fpld.potential import WignerParams, curvature_at_zero, entropy, phi

import oracles

params_st = st.builds(WignerParams, st.floats(0.0, 2.0), st.floats(0.05, 0.99))


def test_entropy_examples():
    assert entropy([1, 0, 0]) == 0.0
    assert entropy([1 / 3] * 3) == pytest.approx(math.log(3), abs=1e-15)
    assert entropy([0.5, 0.25, 0.25]) == pytest.approx(1.0397207708399179, abs=1e-15)
    with pytest.raises(ValueError):
        entropy([1.5, -0.5, 0])


def test_phi_at_zero():
    for lam, rho in [(0.9, 0.4), (2.0, 1.0), (0.1, 0.05)]:
        assert abs(phi(0.0, WignerParams(lam, rho))[0]) <= 1e-9


def test_phi_boundary_closed_form():
    p = WignerParams(0.9, 0.4)
    value, p0 = phi(1.0, p)
    assert p0 == 0.0
    assert value == pytest.approx(math.log(0.08) + 0.81 / 0.32, abs=1e-12)
    assert value == pytest.approx(0.0055213556917, abs=1e-12)


def test_phi_matches_grid_oracle():
    p = WignerParams(0.9, 0.4)
    assert phi(0.1, p)[0] == pytest.approx(oracles.phi_grid(0.1, 0.9, 0.4), abs=1e-6)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        phi(1.2, WignerParams(1, 0.5))
    with pytest.raises(ValueError):
        WignerParams(1, 0.0)


@pytest.mark.parametrize("lam,rho,expected,tol", [
    (0.9, 0.4, -1.1875, 1e-2), (1.2, 0.5, 1.76, 1e-2), (1.0, 0.5, 0.0, 1e-3),
])
def test_curvature_examples(lam, rho, expected, tol):
    assert curvature_at_zero(WignerParams(lam, rho)) == pytest.approx(expected, abs=tol)


@pytest.mark.parametrize("lam,rho,label", [
    (0.9, 0.4, "BarrierSeparatedMaxima"), (1.2, 0.4, "LocalMinAtZero"), (0.5, 0.9, "GlobalMaxAtZero"),
])
def test_classification_examples(lam, rho, label):
    assert potential.classify_landscape(WignerParams(lam, rho)) == label


def test_global_max_really_negative():
    curve = potential.potential_curve(WignerParams(0.5, 0.9), 401)
    assert np.all(curve.values[curve.xs != 0] < 0)


def test_grid_minimum():
    with pytest.raises(ValueError):
        potential.classify_landscape(WignerParams(1, 0.5), grid_size=101)


def test_landscape_csv_and_summary():
    curve = potential.landscape(WignerParams(0.9, 0.4), 201)
    assert curve.to_csv().splitlines()[0] == "x,phi,p0_star"
    s = curve.summary()
    assert s["classification"] == "BarrierSeparatedMaxima"
    assert s["curvature_formula"] == pytest.approx(-1.1875)


@settings(max_examples=20, deadline=None)
@given(params_st)
def test_phi_symmetric_and_zero(params):
    xs = potential.symmetric_grid(41)
    vals = np.array([phi(float(x), params)[0] for x in xs])
    assert abs(vals[20]) <= 1e-9
    assert np.max(np.abs(vals - vals[::-1])) <= 1e-9


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.95), st.floats(0.1, 0.9))
def test_negative_near_zero_below_one(lam, rho):
    p = WignerParams(lam, rho)
    assert all(phi(x, p)[0] < 0 for x in (1e-3, 5e-3, 1e-2))


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(0.1, 1.5), st.floats(0.1, 0.95))
def test_bisection_matches_grid(x, lam, rho):
    assert phi(x, WignerParams(lam, rho))[0] == pytest.approx(oracles.phi_grid(x, lam, rho), abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(0.05, 0.99), st.floats(0.01, 0.99), st.floats(1e-4, 1e-2))
def test_inner_objective_concave(x, rho, frac, h):
    width = 1 - abs(x)
    p0 = frac * width
    if p0 - h <= 0 or p0 + h >= width:
        return
    f = lambda p: potential.inner_objective(p, x, rho)
    assert f(p0 + h) - 2 * f(p0) + f(p0 - h) <= 1e-9
