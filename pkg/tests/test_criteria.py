import json
import math

import pytest
from hypothesis import given, strategies as st

from oscilla.coefficients import GrowthEnvelope, exponential, make_model, make_potential
from oscilla.criteria import (FAILS, HOLDS, INCONCLUSIVE, _verdict, first_zero_test,
                              hille_nehari_gap, oscillation_test, running_table,
                              sufficient_conditions)
from oscilla.volterra import solve_ivp

EUCLID3 = make_model("euclidean", m=3)


def euler(H):
    return make_potential("euler", H=H, m=3)


def test_first_zero_radius_matches_hand_computation():
    # mass on [0, 1] is 1/12 and int_1^40 sqrt(A) = log 40, so 1/40 - 1/R = 12/1600
    rep = first_zero_test(EUCLID3, euler(1.0), 40.0, T=1.0)
    assert rep.verdict == HOLDS
    assert rep.params["R_bar"] == pytest.approx(400.0 / 7.0, rel=1e-9)
    assert rep.lhs == pytest.approx(0.5 * math.log(40.0), rel=1e-9)
    assert rep.rhs == pytest.approx(0.5 * math.log(12.0), rel=1e-9)


def test_first_zero_radius_bounds_the_solver_zero():
    rep = first_zero_test(EUCLID3, euler(1.0), 40.0, T=1.0)
    tr = solve_ivp(EUCLID3, euler(1.0), 1.0, 100.0, max_zeros=1)
    assert tr.zero_locations[0] <= rep.params["R_bar"]


@pytest.mark.parametrize("t", [10.0, 100.0, 1000.0])
def test_first_zero_fails_below_the_critical_curve(t):
    assert first_zero_test(EUCLID3, euler(0.4), t).verdict == FAILS


def test_first_zero_nonintegrable_branch():
    rep = first_zero_test(make_model("euclidean", m=2), make_potential("power", k=1.0, p=1.0), 5.0)
    assert rep.verdict == HOLDS and rep.branch == "reciprocal_not_integrable"


def test_oscillation_verdicts():
    rep, tab = oscillation_test(exponential(), make_potential("constant", k=1.0), 200.0)
    assert rep.verdict == HOLDS
    assert tab.J[-1] > 10
    rep, _ = oscillation_test(EUCLID3, euler(0.5), 1e4)
    assert rep.verdict == INCONCLUSIVE
    rep, _ = oscillation_test(make_model("euclidean", m=2),
                              make_potential("power", k=1.0, p=1.0), 1e3)
    assert rep.verdict == HOLDS and rep.branch == "reciprocal_not_integrable"


def test_running_table_identity_column():
    tab = running_table(EUCLID3, euler(1.0), 1.0, 1e4)
    # sqrt(chi) = 1/(2t) so its integral from 1 is log(t)/2
    assert tab.int_sqrt_chi[-1] == pytest.approx(0.5 * math.log(1e4), rel=1e-10)
    assert tab.int_sqrt_A[-1] == pytest.approx(math.log(1e4), rel=1e-10)


def test_sufficient_conditions_euclidean():
    items = {r.id: r for r in sufficient_conditions(EUCLID3, euler(1.0), 1e4)}
    assert items["iii"].lhs == pytest.approx(2.0, rel=1e-9)
    for k in ("ii", "iii", "iv"):
        assert items[k].verdict == HOLDS
    assert items["v"].verdict == INCONCLUSIVE
    crit = {r.id: r for r in sufficient_conditions(EUCLID3, euler(0.5), 1e4)}
    assert all(r.verdict in (INCONCLUSIVE, FAILS) for r in crit.values())


def test_hyperbolic_item_iii_ratio():
    v = make_model("hyperbolic", m=2, B=1.0)
    items = {r.id: r for r in sufficient_conditions(v, make_potential("coth", H=0.6, m=2), 200.0)}
    assert items["iii"].lhs == pytest.approx(1.2, rel=1e-3)
    assert items["iii"].verdict == HOLDS


def test_item_v_with_envelope():
    env = GrowthEnvelope(1.0, 1.0, 1.0, 0.0)
    items = sufficient_conditions(exponential(), make_potential("constant", k=1.0), 200.0,
                                  envelope=env)
    assert items[-1].id == "v" and items[-1].verdict == HOLDS


def test_hille_nehari():
    rep = hille_nehari_gap(EUCLID3, euler(1.0), 1e4)
    assert rep.lhs == pytest.approx(1.0, rel=1e-9) and rep.verdict == HOLDS
    rep = hille_nehari_gap(EUCLID3, euler(0.5), 1e4)
    assert rep.lhs == pytest.approx(0.5, rel=1e-9)
    assert rep.verdict == FAILS and rep.params["borderline"]
    rep = hille_nehari_gap(exponential(), make_potential("constant", k=1.0), 100.0)
    assert rep.lhs == pytest.approx(1.0, rel=1e-9)


def test_reports_serialize():
    rep = first_zero_test(EUCLID3, euler(0.4), 10.0)
    text = json.dumps(rep.to_dict())
    assert '"R_bar": "nan"' in text


@given(margin=st.floats(-10, 10), err=st.floats(0, 5))
def test_verdict_respects_error_bar(margin, err):
    v = _verdict(margin, err)
    if v == HOLDS:
        assert margin > err
    elif v == FAILS:
        assert margin < -err
    else:
        assert abs(margin) <= err
