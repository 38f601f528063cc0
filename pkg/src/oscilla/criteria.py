"""Oscillation and first-zero criteria evaluated numerically.

Every test returns a CriterionReport whose verdict is ``holds`` only when the
left side beats the right side by more than the combined error bar; results
inside the error bar are ``inconclusive``.  Limits at infinity are never
claimed outright: they are read off running quantities over the last decade
of the horizon with explicit thresholds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .coefficients import CoefficientProfile, GrowthEnvelope, envelope_profile
from .critical import decay_rate_inf, log_tail_integral
from .errors import ParameterError, PreconditionError

HOLDS, FAILS, INCONCLUSIVE = "holds", "fails", "inconclusive"


@dataclass
class CriterionReport:
    id: str
    verdict: str
    lhs: float
    rhs: float
    lhs_err: float = 0.0
    rhs_err: float = 0.0
    branch: str = ""
    params: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, val in list(d.items()):
            if isinstance(val, float) and not math.isfinite(val):
                d[k] = str(val)
        d["params"] = {k: (str(x) if isinstance(x, float) and not math.isfinite(x) else x)
                       for k, x in self.params.items()}
        return d


def _verdict(margin: float, err: float) -> str:
    if margin > err:
        return HOLDS
    if margin < -err:
        return FAILS
    return INCONCLUSIVE


def _quad(f, a, b, brk=()):
    pts = [p for p in brk if a < p < b]
    val, err = integrate.quad(f, a, b, points=pts or None, limit=200,
                              epsabs=1e-12, epsrel=1e-10)
    return val, err


def _sqrtA(A):
    return lambda s: math.sqrt(max(float(A(s)), 0.0))


def _breaks(*profiles, lo=0.0, hi=math.inf):
    pts = set()
    for p in profiles:
        pts |= set(float(x) for x in p.breakpoints(lo, hi))
    return sorted(pts)


def integrate_sqrt_A(A: CoefficientProfile, T: float, t: float) -> tuple[float, float]:
    return _quad(_sqrtA(A), T, t, _breaks(A, lo=T, hi=t))


def integrate_Av(v: CoefficientProfile, A: CoefficientProfile, a: float, b: float):
    f = lambda s: float(A(s)) * float(v(s))
    return _quad(f, a, b, _breaks(v, A, lo=a, hi=b))


def _integrable(v: CoefficientProfile) -> bool:
    if v.reciprocal_integrable is None:
        raise PreconditionError("integrability of 1/v is unknown for this profile")
    return v.reciprocal_integrable


@dataclass
class RunningTable:
    """Running quantities on a geometric grid from T to the horizon."""

    t: np.ndarray
    int_sqrt_A: np.ndarray
    int_sqrt_chi: np.ndarray
    log_tail: np.ndarray
    int_Av: np.ndarray
    err: np.ndarray
    logv: np.ndarray

    @property
    def J(self) -> np.ndarray:
        return self.int_sqrt_A - self.int_sqrt_chi

    def last_decade(self) -> np.ndarray:
        return self.t >= max(self.t[0], self.t[-1] / 10.0)

    def columns(self, A: CoefficientProfile) -> dict[str, np.ndarray]:
        sqA = np.sqrt(np.maximum(np.asarray(A(self.t)), 0.0))
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            sq_chi = 0.5 * np.exp(-(self.log_tail + self.logv))
        return {
            "t": self.t, "int_sqrt_A": self.int_sqrt_A, "int_sqrt_chi": self.int_sqrt_chi,
            "J": self.J, "running_max_J": np.maximum.accumulate(self.J),
            "ratio_sqrtA_sqrtchi": sqA / sq_chi, "int_Av": self.int_Av,
        }


def running_table(v: CoefficientProfile, A: CoefficientProfile, T: float,
                  horizon: float, n: int = 240) -> RunningTable:
    if not 0 < T < horizon:
        raise ParameterError("need 0 < T < horizon")
    grid = np.unique(np.r_[np.geomspace(T, horizon, n), _breaks(v, A, lo=T, hi=horizon)])
    sA = np.zeros_like(grid)
    iAv = np.zeros_like(grid)
    err = np.zeros_like(grid)
    integrable = _integrable(v)
    for k in range(1, grid.size):
        q, e = integrate_sqrt_A(A, grid[k - 1], grid[k])
        sA[k] = sA[k - 1] + q
        err[k] = err[k - 1] + e
        if not integrable:
            q2, _ = integrate_Av(v, A, grid[k - 1], grid[k])
            iAv[k] = iAv[k - 1] + q2
    if integrable:
        lt = np.array([log_tail_integral(v, x) for x in grid])
        log_tail, lerr = lt[:, 0], lt[:, 1]
        # identity: int_T^t sqrt(chi) = (log tail(T) - log tail(t)) / 2
        sq_chi = 0.5 * (log_tail[0] - log_tail)
        err = err + 0.5 * (lerr + lerr[0])
        iAv[:] = np.nan
    else:
        log_tail = np.full_like(grid, np.inf)
        sq_chi = np.full_like(grid, np.nan)
    return RunningTable(grid, sA, sq_chi, log_tail, iAv, err, np.asarray(v.log_value(grid)))


def _increasing_past_threshold(values, t, err, threshold):
    """Running maximum above threshold and still growing over the last decade."""
    run = np.maximum.accumulate(values)
    start = np.searchsorted(t, max(t[0], t[-1] / 10.0))
    grew = run[-1] - run[start] > err
    return bool(run[-1] > threshold and grew), float(run[-1])


# ----------------------------------------------------------------------------

def first_zero_test(v: CoefficientProfile, A: CoefficientProfile, t: float,
                    T: float | None = None, n_scan: int = 40) -> CriterionReport:
    """Sufficient condition for a zero, plus the radius R_bar bounding the first one.

    With T omitted, T is scanned over a geometric grid in (0, t) and the most
    favourable value is reported.
    """
    integrable = _integrable(v)
    branch = "reciprocal_integrable" if integrable else "reciprocal_not_integrable"
    Ts = [T] if T is not None else list(np.geomspace(1e-3 * t, t, n_scan + 1)[:-1])
    brk = _breaks(v, A, lo=0.0, hi=t)
    lt_t, lt_err = log_tail_integral(v, t) if integrable else (math.inf, 0.0)
    best = None
    for Tk in Ts:
        if not 0 < Tk < t:
            raise ParameterError("need 0 < T < t")
        mass, mass_err = _quad(lambda s: float(A(s)) * float(v(s)), 0.0, Tk, brk)
        if mass <= 0:
            continue
        sA, sA_err = integrate_sqrt_A(A, Tk, t)
        if integrable:
            lt_T, lt_T_err = log_tail_integral(v, Tk)
            lhs = sA - 0.5 * (lt_T - lt_t)
            rhs = -0.5 * (math.log(mass) + lt_T)
            lhs_err = sA_err + 0.5 * (lt_err + lt_T_err)
            rhs_err = 0.5 * (mass_err / mass + lt_T_err)
            margin = lhs - rhs
        else:
            lhs, rhs, lhs_err, rhs_err, margin = sA, -math.inf, sA_err, 0.0, math.inf
        cand = (margin - lhs_err - rhs_err, Tk, lhs, rhs, lhs_err, rhs_err, mass, sA)
        if best is None or cand[0] > best[0]:
            best = cand
    if best is None:
        raise PreconditionError("A vanishes identically on the scanned [0, T]")
    _, Tb, lhs, rhs, lhs_err, rhs_err, mass, sA = best
    verdict = _verdict(lhs - rhs, lhs_err + rhs_err) if integrable else HOLDS
    params = {"T": float(Tb), "t": float(t), "R_bar": math.nan}
    if verdict == HOLDS:
        target = -2.0 * sA - math.log(mass)
        params["R_bar"] = _solve_r_bar(v, t, target)
    return CriterionReport("first_zero", verdict, lhs, rhs, lhs_err, rhs_err, branch, params)


def _solve_r_bar(v, t, target, rel_tol=1e-12):
    """Bisection for log int_t^R ds/v = target; the left side increases with R."""
    g = lambda R: log_tail_integral(v, t, R)[0]
    lo, hi = t, 2.0 * t
    while g(hi) < target:
        lo, hi = hi, 2.0 * hi
        if hi > min(v.domain_end, 1e300):
            raise PreconditionError("first-zero radius not found below the domain end")
    seen = []
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        val = g(mid)
        seen.append((mid, val))
        if val < target:
            lo = mid
        else:
            hi = mid
    seen.sort()
    vals = [s[1] for s in seen]
    if any(b < a for a, b in zip(vals, vals[1:])):
        raise PreconditionError("right side of the localization equation is not monotone")
    return 0.5 * (lo + hi)


def oscillation_test(v: CoefficientProfile, A: CoefficientProfile, horizon: float,
                     t0: float = 1.0, threshold: float = 10.0) -> tuple[CriterionReport, RunningTable]:
    """Oscillation at infinity from running quantities on [t0, horizon].

    1/v not integrable: oscillatory when A v is not integrable.
    1/v integrable: oscillatory when int_T^t (sqrt A - sqrt chi) is unbounded above.
    """
    tab = running_table(v, A, t0, horizon)
    if not _integrable(v):
        ok, top = _increasing_past_threshold(tab.int_Av, tab.t, 1e-9 * abs(tab.int_Av[-1]),
                                             threshold)
        branch = "reciprocal_not_integrable"
        note = "A v integral above threshold and growing" if ok else ""
    else:
        ok, top = _increasing_past_threshold(tab.J, tab.t, tab.err[-1] + 1e-9, threshold)
        branch = "reciprocal_integrable"
        note = "running max of int (sqrt A - sqrt chi) above threshold and growing" if ok else ""
    report = CriterionReport("oscillation", HOLDS if ok else INCONCLUSIVE, top, threshold,
                             float(tab.err[-1]), 0.0, branch,
                             {"t0": t0, "horizon": horizon}, note)
    return report, tab


def _tail_extreme(values, mask, kind):
    sel = values[mask]
    sel = sel[np.isfinite(sel)]
    if sel.size == 0:
        return math.nan
    return float(sel.max() if kind == "sup" else sel.min())


def _ratio_verdict(est, margin):
    if not math.isfinite(est):
        return INCONCLUSIVE
    if est > 1 + margin:
        return HOLDS
    if est < 1 - margin:
        return FAILS
    return INCONCLUSIVE


def sufficient_conditions(v: CoefficientProfile, A: CoefficientProfile, horizon: float,
                          T: float = 1.0, envelope: GrowthEnvelope | None = None,
                          margin: float = 1e-3, threshold: float = 10.0,
                          tab: RunningTable | None = None) -> list[CriterionReport]:
    """The five sufficient conditions for oscillation, items (i) to (v)."""
    out = []
    integrable = _integrable(v)
    params = {"T": T, "horizon": horizon, "margin": margin}
    if not integrable:
        for item in ("i", "ii", "iii", "iv"):
            out.append(CriterionReport(item, INCONCLUSIVE, math.nan, math.nan, branch="n/a",
                                       params=params, note="needs 1/v integrable"))
    else:
        tab = tab or running_table(v, A, T, horizon)
        cols = tab.columns(A)
        dec = tab.last_decade()
        ratio = cols["ratio_sqrtA_sqrtchi"]
        # (i) A >= chi everywhere and sqrt A - sqrt chi not integrable
        above = bool(np.all(ratio[1:] >= 1 - 1e-9))
        grows, top = _increasing_past_threshold(tab.J, tab.t, tab.err[-1] + 1e-9, threshold)
        v1 = HOLDS if above and grows else (FAILS if not above else INCONCLUSIVE)
        out.append(CriterionReport("i", v1, top, threshold, float(tab.err[-1]), 0.0,
                                   "reciprocal_integrable", params,
                                   "" if above else "A < chi somewhere on the grid"))
        # (ii) limsup of the ratio of integrals
        with np.errstate(divide="ignore", invalid="ignore"):
            r2 = tab.int_sqrt_A / tab.int_sqrt_chi
        e2 = _tail_extreme(r2, dec, "sup")
        out.append(CriterionReport("ii", _ratio_verdict(e2, margin), e2, 1.0, margin, 0.0,
                                   "reciprocal_integrable", params))
        # (iii) liminf of the pointwise ratio
        e3 = _tail_extreme(ratio, dec, "inf")
        out.append(CriterionReport("iii", _ratio_verdict(e3, margin), e3, 1.0, margin, 0.0,
                                   "reciprocal_integrable", params))
        # (iv) limsup of int sqrt A against -1/2 log of the tail
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = -0.5 * tab.log_tail
            r4 = np.where(denom > 0, tab.int_sqrt_A / denom, np.nan)
        e4 = _tail_extreme(r4, dec, "sup")
        out.append(CriterionReport("iv", _ratio_verdict(e4, margin), e4, 1.0, margin, 0.0,
                                   "reciprocal_integrable", params))
    out.append(_item_v(v, A, horizon, T, envelope, params, threshold))
    return out


def _item_v(v, A, horizon, T, envelope, params, threshold):
    if envelope is None:
        return CriterionReport("v", INCONCLUSIVE, math.nan, math.nan, branch="n/a",
                               params=params, note="needs a growth envelope")
    grid = np.geomspace(max(T, envelope.t_min + 1e-9, 1e-6), horizon, 400)
    Av = np.asarray(A(grid))
    fails = []
    if np.any(np.asarray(v.log_value(grid)) > np.asarray(envelope.log_value(grid)) + 1e-12):
        fails.append("v exceeds the envelope")
    if np.any(Av <= 0) or np.any(np.diff(Av) < -1e-12 * np.abs(Av[1:])):
        fails.append("A is not positive and nondecreasing")
    vol, _ = _quad(lambda s: float(v(s)), grid[0], horizon, _breaks(v, lo=grid[0], hi=horizon))
    if not vol > threshold:
        fails.append("volume growth not detected")
    if fails:
        return CriterionReport("v", FAILS, math.nan, math.nan, branch="envelope",
                               params=params, note="; ".join(fails))
    f = envelope_profile(envelope)
    tns = np.geomspace(max(horizon / 10.0, grid[0]), horizon, 8)
    hits, best = 0, -math.inf
    for tn in tns:
        try:
            inf_val, _ = decay_rate_inf(f, tn)
        except PreconditionError:
            continue
        gap = math.sqrt(float(A(tn))) - inf_val
        best = max(best, gap)
        hits += gap > 0
    verdict = HOLDS if hits >= 3 else INCONCLUSIVE
    return CriterionReport("v", verdict, best, 0.0, 0.0, 0.0, "envelope",
                           dict(params, hits=int(hits), probes=len(tns)))


def hille_nehari_gap(v: CoefficientProfile, A: CoefficientProfile, horizon: float,
                     T: float = 1.0, margin: float = 1e-3,
                     tab: RunningTable | None = None) -> CriterionReport:
    """liminf of sqrt(A) v(t) int_t^inf ds/v over the last decade, against 1/2.

    Only a value demonstrably above 1/2 counts; a liminf equal to 1/2 is
    reported as ``fails`` with the borderline flag set, since oscillation can
    still occur there.
    """
    if not _integrable(v):
        return CriterionReport("hille_nehari", INCONCLUSIVE, math.nan, 0.5,
                               branch="n/a", note="needs 1/v integrable")
    tab = tab or running_table(v, A, T, horizon)
    q = 0.5 * tab.columns(A)["ratio_sqrtA_sqrtchi"]
    est = _tail_extreme(q, tab.last_decade(), "inf")
    borderline = abs(est - 0.5) <= margin
    verdict = HOLDS if est > 0.5 + margin else FAILS
    return CriterionReport("hille_nehari", verdict, est, 0.5, margin, 0.0,
                           "reciprocal_integrable", {"T": T, "horizon": horizon,
                                                     "borderline": bool(borderline)},
                           "liminf equals 1/2: oscillation not excluded" if borderline else "")
