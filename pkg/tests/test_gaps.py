import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscilla.coefficients import (GrowthEnvelope, envelope_profile, exponential, make_model,
                                  make_potential)
from oscilla.errors import HorizonError, ParameterError, PreconditionError
from oscilla.gaps import decompose, gap_bound, gap_sweep, solve_for_gaps, verify_gap_bound
from oscilla.volterra import solve_ivp

SPACING = 2 * math.pi / math.sqrt(3)


@pytest.fixture(scope="module")
def exp_track():
    return solve_for_gaps(exponential(), make_potential("constant", k=1.0), [300.0])


def test_gap_bound_values():
    assert gap_bound(2.0, 1.0) == pytest.approx(9.0)
    assert gap_bound(2.0, 2.0) == pytest.approx(3.0)
    with pytest.raises(ParameterError):
        gap_bound(1.0, 1.0)


@given(tau=st.floats(5.0, 290.0))
@settings(max_examples=30)
def test_decomposition_partitions_the_gap(exp_track, tau):
    rec = decompose(exp_track, tau)
    assert all(g >= 0 for g in rec.lengths)
    assert sum(rec.lengths) == pytest.approx(rec.T2 - rec.tau, rel=1e-12, abs=1e-9)
    assert rec.tau <= rec.T1 < rec.T2
    assert rec.T2 - rec.T1 == pytest.approx(SPACING, rel=1e-8)
    assert rec.riccati_ok


def test_ratio_tends_to_one(exp_track):
    recs = gap_sweep(exp_track, np.linspace(20.0, 290.0, 28), c=2.0, alpha=1.0)
    assert max(r.ratio for r in recs) <= gap_bound(2.0, 1.0)
    assert recs[-1].ratio <= 1 + 2 * SPACING / 290.0
    assert recs[0].c == 2.0


def test_level_crossings_are_where_riccati_hits_the_levels(exp_track):
    rec = decompose(exp_track, 100.0)
    p = rec.T1 + rec.g3p
    q = p + rec.g1p
    # v = e^t makes y very steep in t, so check the bracket rather than the value
    d = 1e-8
    y = exp_track.riccati_at(np.array([p - d, p + d, q - d, q + d]))
    assert y[0] < -1.0 <= y[1]
    assert y[2] < 1.0 <= y[3]
    assert rec.order.endswith("I3',I1',I2'")


def test_level_values_on_a_moderate_profile():
    tr = solve_ivp(make_model("euclidean", m=3), make_potential("euler", H=1.0, m=3), 1.0, 1e6,
                   max_zeros=3)
    rec = decompose(tr, 20.0)
    p = rec.T1 + rec.g3p
    y = tr.riccati_at(np.array([p, p + rec.g1p]))
    assert np.allclose(y, [-1.0, 1.0], atol=1e-6)


def test_euler_gap_ratio():
    # tau just past a zero: T2/tau is two zero ratios, e^(4 pi/sqrt 3)
    tr = solve_ivp(make_model("euclidean", m=3), make_potential("euler", H=1.0, m=3), 1.0, 1e9,
                   max_zeros=6)
    zl = tr.zero_locations
    rec = decompose(tr, zl[1] * (1 + 1e-9))
    assert rec.ratio == pytest.approx(math.exp(4 * math.pi / math.sqrt(3)), rel=1e-6)


def test_superexponential_gap_bound():
    env = GrowthEnvelope(1.0, 1.0, 2.0, 0.0)
    v = envelope_profile(env)
    A = make_potential("growth", envelope=env, c=2.0, t_cap=1e-9)
    res = verify_gap_bound(v, A, env, 2.0, np.linspace(2.0, 20.0, 30))
    assert res.bound == pytest.approx(3.0)
    assert res.passes and res.observed <= 3.0


def test_growth_hypothesis_is_checked():
    env = GrowthEnvelope(1.0, 1.0, 1.0, 0.0)
    with pytest.raises(PreconditionError):
        verify_gap_bound(exponential(), make_potential("constant", k=0.5), env, 2.0, [10.0, 20.0])
    with pytest.raises(PreconditionError):
        verify_gap_bound(exponential(2.0), make_potential("constant", k=1.0), env, 2.0,
                         [10.0, 20.0])


def test_not_enough_zeros(exp_track):
    with pytest.raises(HorizonError):
        decompose(exp_track, exp_track.grid[-1] - 1.0)
    with pytest.raises(HorizonError):
        solve_for_gaps(make_model("euclidean", m=3), make_potential("euler", H=0.3, m=3), [10.0],
                       cap=100.0)
