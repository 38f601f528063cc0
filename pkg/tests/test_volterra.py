import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscilla.coefficients import exponential, from_table, make_model, make_potential
from oscilla.errors import HorizonError, ParameterError, PreconditionError
from oscilla.volterra import (extend_until_zeros, integral_residual, solve_ivp,
                              sturm_compare)

EULER_RATIO = math.exp(2 * math.pi / math.sqrt(3))


def exp_oracle(t):
    """z'' + z' + z = 0, z(0) = 1, z'(0) = 0."""
    w = math.sqrt(3) / 2
    return np.exp(-t / 2) * (np.cos(w * t) + np.sin(w * t) / (2 * w))


def test_zero_potential_keeps_initial_value():
    tr = solve_ivp(make_model("euclidean", m=3), make_potential("zero"), 2.5, 50.0)
    assert np.allclose(tr.z, 2.5, rtol=0, atol=1e-12)
    assert tr.zeros == []


@given(z0=st.floats(0.01, 100.0))
@settings(max_examples=8)
def test_linear_in_initial_value(z0):
    v, A = make_model("euclidean", m=3), make_potential("euler", H=1.0, m=3)
    base = solve_ivp(v, A, 1.0, 200.0)
    tr = solve_ivp(v, A, z0, 200.0)
    pts = np.linspace(0.5, 200.0, 37)
    assert np.allclose(tr.evaluate(pts)[0], z0 * base.evaluate(pts)[0], rtol=1e-7,
                       atol=1e-9 * z0)


def test_euler_subcritical_has_no_zeros():
    tr = solve_ivp(make_model("euclidean", m=3), make_potential("euler", H=0.4, m=3), 1.0, 1e3)
    assert tr.zeros == []
    assert tr.z.min() > 0.3
    assert tr.residual <= 1e-6 and tr.stability <= 1e-6


def test_euler_supercritical_zero_ratio():
    tr = solve_ivp(make_model("euclidean", m=3), make_potential("euler", H=1.0, m=3), 1.0,
                   1e9, max_zeros=6)
    zl = tr.zero_locations
    assert len(zl) >= 5
    assert np.allclose(zl[1:] / zl[:-1], EULER_RATIO, rtol=1e-6)
    assert tr.singular_start


def test_constant_coefficient_matches_closed_form():
    tr = solve_ivp(exponential(), make_potential("constant", k=1.0), 1.0, 60.0)
    t = np.linspace(0.0, 60.0, 301)
    z, _ = tr.evaluate(t)
    assert np.allclose(z, exp_oracle(t), rtol=0, atol=1e-9)
    w = math.sqrt(3) / 2
    first = (math.pi - math.atan(2 * w)) / w
    zl = tr.zero_locations
    assert zl[0] == pytest.approx(first, abs=1e-8)
    assert np.allclose(np.diff(zl), math.pi / w, rtol=1e-8)


def test_regular_start_away_from_origin():
    # t^2 z'' + 2 t z' + z = 0 from z(1) = 1, z'(1) = 0
    tr = solve_ivp(make_model("euclidean", m=3), make_potential("power", k=1.0, p=2.0),
                   1.0, 30.0, t0=1.0)
    expected = math.exp(4 * math.pi / (3 * math.sqrt(3)))
    assert tr.zero_locations[0] == pytest.approx(expected, rel=1e-8)
    assert not tr.singular_start


def test_residual_is_small_everywhere():
    tr = solve_ivp(make_model("hyperbolic", m=2), make_potential("coth", H=0.6, m=2), 1.0, 60.0)
    assert np.max(np.abs(integral_residual(tr))) <= 1e-6


@given(H=st.floats(0.7, 3.0))
@settings(max_examples=6)
def test_riccati_nondecreasing_between_zeros(H):
    tr = solve_ivp(make_model("euclidean", m=3), make_potential("euler", H=H, m=3), 1.0, 500.0)
    y, g = tr.riccati, tr.grid
    edges = np.r_[0.0, tr.zero_locations, g[-1] + 1]
    for a, b in zip(edges, edges[1:]):
        sel = (g > a) & (g < b) & np.isfinite(y)
        ys = y[sel]
        assert np.all(np.diff(ys) >= -1e-8 * np.maximum(1.0, np.abs(ys[1:])))


def test_jump_keeps_z_and_flux_continuous():
    t = np.linspace(0.0, 4.0, 81)
    vals = np.where(t > 2.0, 0.5 * t ** 2, t ** 2)
    v = from_table(t, vals, jumps=[(2.0, 4.0, 2.0)])
    tr = solve_ivp(v, make_potential("constant", k=2.0), 1.0, 4.0, nodes=(2.0,))
    k = int(np.searchsorted(tr.grid, 2.0))
    assert tr.grid[k] == 2.0
    (zl, zr), (dl, dr) = tr.evaluate(np.array([2.0 - 1e-9, 2.0 + 1e-9]))
    assert abs(zl - zr) < 1e-7
    # the flux is continuous, so z' doubles when v halves
    assert dr == pytest.approx(2.0 * dl, rel=1e-6)


def test_sturm_comparison_example():
    v = make_model("euclidean", m=4)
    cmp = sturm_compare(v, make_potential("power", k=10.0, p=1.0, t_cap=1.0),
                        make_potential("power", k=3.0, p=1.5, t_cap=1.0), 1.0, 60.0)
    assert cmp.min_gap >= -1e-6
    assert cmp.first_zero_1 is not None
    assert cmp.first_zero_2 is None or cmp.first_zero_2 >= cmp.first_zero_1


@given(m=st.sampled_from([3, 4, 5]), k1=st.floats(1.0, 30.0), shrink=st.floats(0.0, 1.0),
       p=st.floats(0.0, 2.0))
@settings(max_examples=8)
def test_sturm_comparison_property(m, k1, shrink, p):
    A1 = make_potential("power", k=k1, p=p, t_cap=1.5)
    A2 = make_potential("power", k=k1 * shrink, p=p, t_cap=1.5)
    cmp = sturm_compare(make_model("euclidean", m=m), A1, A2, 1.0, 40.0)
    assert cmp.min_gap >= -1e-6


def test_sturm_comparison_needs_ordered_potentials():
    v = make_model("euclidean", m=3)
    with pytest.raises(PreconditionError):
        sturm_compare(v, make_potential("constant", k=1.0), make_potential("constant", k=2.0))


def test_extend_until_zeros_grows_and_caps():
    v, A = exponential(), make_potential("constant", k=1.0)
    tr = extend_until_zeros(v, A, 5, 4.0, 100.0)
    assert len(tr.zeros) >= 5
    with pytest.raises(HorizonError):
        extend_until_zeros(make_model("euclidean", m=3), make_potential("euler", H=0.3, m=3),
                           1, 10.0, 50.0)


def test_bad_inputs():
    v, A = make_model("euclidean", m=3), make_potential("zero")
    with pytest.raises(ParameterError):
        solve_ivp(v, A, -1.0, 10.0)
    with pytest.raises(ParameterError):
        solve_ivp(v, A, 1.0, 10.0, rtol=-1e-3)
    with pytest.raises(ParameterError):
        solve_ivp(v, A, 1.0, 10.0, flux0=1.0)
