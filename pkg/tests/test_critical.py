import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import simpson

from oscilla.coefficients import GrowthEnvelope, exponential, make_model
from oscilla.critical import (CriticalCurve, LogTailTable, chi, chi_f, chi_tilde_f,
                              decay_rate_inf, log_tail_difference, log_tail_integral,
                              scaled_tail, sqrt_chi_integral, tail_integral)
from oscilla.errors import DivergenceError, DomainError, PreconditionError


def test_tail_integral_closed_forms():
    assert tail_integral(make_model("euclidean", m=3), 2.0) == pytest.approx(0.5, rel=1e-14)
    assert tail_integral(exponential(), 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert math.isinf(tail_integral(make_model("euclidean", m=2), 1.0))


def test_tail_needs_t_below_R_and_positive_t():
    v = make_model("euclidean", m=3)
    with pytest.raises(DomainError):
        tail_integral(v, 2.0, 1.0)
    with pytest.raises(DomainError):
        tail_integral(v, 0.0)


@given(m=st.floats(2.2, 8.0), t=st.floats(0.05, 200.0))
def test_euclidean_critical_curve(m, t):
    assert chi(make_model("euclidean", m=m), t) == pytest.approx((m - 2) ** 2 / (4 * t * t),
                                                                 rel=1e-10)


@given(t=st.floats(0.5, 50.0), frac=st.floats(1.1, 20.0))
def test_finite_R_euclidean(t, frac):
    R = t * frac
    s, _ = scaled_tail(make_model("euclidean", m=3), t, R)
    assert s == pytest.approx(t * (1 - t / R), rel=1e-12)


def test_chi_values():
    assert chi(make_model("euclidean", m=4), 2.0) == pytest.approx(0.25)
    assert chi(make_model("hyperbolic", m=3, B=1.0), 20.0) == pytest.approx(1.0, rel=1e-12)
    assert chi(exponential(), 7.0) == pytest.approx(0.25)
    with pytest.raises(DivergenceError):
        chi(make_model("euclidean", m=2), 1.0)


def test_hyperbolic_numeric_path_matches_closed_form():
    # m = 4 has no closed form here, so compare with an independent Simpson rule
    v = make_model("hyperbolic", m=4, B=1.0)
    t = 1.5
    s = np.linspace(t, t + 60.0, 200001)
    ref = simpson(np.exp(3 * (np.log(np.sinh(t)) - np.log(np.sinh(s)))), x=s)
    assert scaled_tail(v, t)[0] == pytest.approx(ref, rel=1e-9)


def test_superexp_numeric_tail_against_simpson():
    v = make_model("superexp", m=3, a=1.0, alpha=1.5)
    t = 3.0
    s = np.linspace(t, t + 30.0, 300001)
    ref = simpson(np.exp(t ** 1.5 - s ** 1.5), x=s)
    assert scaled_tail(v, t)[0] == pytest.approx(ref, rel=1e-9)


def test_chi_tilde_and_asymptotic_equivalence():
    env = GrowthEnvelope(1.0, 1.0, 2.0, 0.0)
    assert chi_tilde_f(env, 3.0) == pytest.approx(9.0)
    assert chi_tilde_f(env, 50.0) / chi_f(env, 50.0) == pytest.approx(1.0, abs=1e-3)


def test_chi_f_at_least_chi_where_v_is_the_envelope():
    # superexp equals its envelope from t = 2 on; below that the cap makes v smaller
    env = GrowthEnvelope(1.0, 1.0, 1.5, 0.0)
    v = make_model("superexp", m=3, a=1.0, alpha=1.5)
    t = np.linspace(2.0, 12.0, 11)
    assert np.allclose(chi(v, t), chi_f(env, t), rtol=1e-9)


@given(T=st.floats(0.2, 5.0), span=st.floats(0.1, 20.0),
       family=st.sampled_from(["euclidean", "hyperbolic"]))
def test_identity_sqrt_chi_integral(T, span, family):
    v = make_model(family, m=3, B=1.0)
    direct, _ = sqrt_chi_integral(v, T, T + span)
    assert direct == pytest.approx(log_tail_difference(v, T, T + span), abs=1e-7)


def test_sqrt_chi_not_integrable():
    for v in (make_model("euclidean", m=3), make_model("hyperbolic", m=3),
              make_model("superexp", m=3, a=1.0, alpha=2.0)):
        vals = [log_tail_difference(v, 1.0, t) for t in (10.0, 100.0, 1000.0)]
        assert vals[0] < vals[1] < vals[2]
        assert vals[2] - vals[1] > 1.0


def test_log_tail_table_matches_direct():
    v = make_model("superexp", m=3, a=1.0, alpha=2.0)
    table = LogTailTable(v, 2.0, 40.0, n=300)
    t = np.array([2.3, 5.7, 13.1, 39.0, 55.0])
    direct = np.array([log_tail_integral(v, x)[0] for x in t])
    assert np.allclose(table(t), direct, rtol=1e-8, atol=1e-8)


def test_decay_rate_inf():
    val, attained = decay_rate_inf(exponential(), 20.0)
    assert val == pytest.approx(0.5, rel=1e-6)
    assert not attained
    with pytest.raises(PreconditionError):
        decay_rate_inf(exponential(0.1), 1.0)


def test_critical_curve_variants():
    env = GrowthEnvelope(1.0, 1.0, 1.0, 0.0)
    assert CriticalCurve(env, "chi_tilde_f")(4.0) == pytest.approx(0.25)
    assert CriticalCurve(env, "chi_f")(4.0) == pytest.approx(0.25)
    with pytest.raises(PreconditionError):
        CriticalCurve(make_model("euclidean", m=3), "chi_f")
    with pytest.raises(DivergenceError):
        CriticalCurve(make_model("euclidean", m=2))
    tab = CriticalCurve(make_model("euclidean", m=3)).table([1.0, 2.0])
    assert tab.shape == (2, 2) and tab[1, 1] == pytest.approx(1 / 16)
