"""Gaps between consecutive zeros and their level-set decomposition.

For a starting radius tau, T1 < T2 are the first two zeros at or after tau.
The Riccati variable y = -v z'/z is nondecreasing on [tau, T1) and on
(T1, T2), running up to +inf before each zero and starting from -inf after
it.  Cutting at the levels y = -1 and y = +1 splits [tau, T2) minus {T1}
into six intervals, recorded in their natural order:

    g3  y < -1 on [tau, T1)      g3p  y < -1 on (T1, T2)
    g1  |y| <= 1 on [tau, T1)    g1p  |y| <= 1 on (T1, T2)
    g2  y > 1 on [tau, T1)       g2p  y > 1 on (T1, T2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coefficients import CoefficientProfile, GrowthEnvelope
from .errors import HorizonError, ParameterError, PreconditionError
from .volterra import SolutionTrack, solve_ivp

LENGTH_FIELDS = ("g3", "g1", "g2", "g3p", "g1p", "g2p")


@dataclass
class GapRecord:
    tau: float
    T1: float
    T2: float
    g3: float
    g1: float
    g2: float
    g3p: float
    g1p: float
    g2p: float
    c: float = math.nan
    alpha: float = math.nan
    order: str = ""
    riccati_ok: bool = True

    @property
    def ratio(self) -> float:
        return self.T2 / self.tau

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in LENGTH_FIELDS)


def gap_bound(c: float, alpha: float) -> float:
    """((c + 1)/(c - 1))^(2/alpha), the asymptotic bound on T2/tau."""
    if not c > 1:
        raise ParameterError("gap bound needs c > 1")
    if not alpha > 0:
        raise ParameterError("gap bound needs alpha > 0")
    return ((c + 1.0) / (c - 1.0)) ** (2.0 / alpha)


def _crossing(track: SolutionTrack, a: float, b: float, level: float) -> float:
    """Point in (a, b) where the nondecreasing Riccati variable crosses ``level``."""
    lo, hi = a, b
    tol = 1e-12 * max(1.0, abs(b))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if track.riccati_at(mid)[0] < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def decompose(track: SolutionTrack, tau: float, level: float = 1.0) -> GapRecord:
    zl = track.zero_locations
    k = int(np.searchsorted(zl, tau, side="left"))
    if k + 1 >= zl.size:
        raise HorizonError(f"fewer than two zeros after tau={tau}")
    T1, T2 = float(zl[k]), float(zl[k + 1])
    y_tau = track.riccati_at(tau)[0] if tau < T1 else -math.inf
    p = _crossing(track, tau, T1, -level) if y_tau < -level else tau
    q = _crossing(track, p, T1, level) if y_tau < level else p
    pp = _crossing(track, T1, T2, -level)
    qp = _crossing(track, pp, T2, level)
    rec = GapRecord(tau, T1, T2, p - tau, q - p, T1 - q, pp - T1, qp - pp, T2 - qp)
    names = ["I3", "I1", "I2", "I3'", "I1'", "I2'"]
    rec.order = ",".join(n for n, g in zip(names, rec.lengths) if g > 0)
    d = 1e-6 * (T2 - T1)
    y = track.riccati_at(np.array([T1 - d, T1 + d]))
    rec.riccati_ok = bool(y[0] > 0 > y[1])
    return rec


def solve_for_gaps(v: CoefficientProfile, A: CoefficientProfile, taus: Sequence[float],
                   cap: float | None = None, **opts) -> SolutionTrack:
    """Solve far enough that two zeros follow the largest tau (horizon grows 1.5x)."""
    top = float(max(taus))
    horizon = 1.5 * top
    cap = cap or 100.0 * top
    while True:
        track = solve_ivp(v, A, horizon=min(horizon, v.domain_end), **opts)
        if np.sum(track.zero_locations >= top) >= 2:
            return track
        if horizon >= cap:
            raise HorizonError("not enough zeros beyond the largest tau below the cap")
        horizon = min(cap, 1.5 * horizon)


def gap_sweep(track: SolutionTrack, taus: Sequence[float], c: float = math.nan,
              alpha: float = math.nan, level: float = 1.0, executor=None) -> list[GapRecord]:
    taus = [float(t) for t in taus]
    if any(t <= 0 for t in taus):
        raise ParameterError("tau values must be positive")
    run = (lambda t: decompose(track, t, level))
    recs = list(executor.map(run, taus)) if executor else [run(t) for t in taus]
    for r in recs:
        r.c, r.alpha = c, alpha
    return recs


@dataclass
class GapVerification:
    observed: float
    bound: float
    passes: bool
    records: list = field(default_factory=list)


def check_growth_hypothesis(v, A, env: GrowthEnvelope, c: float, lo: float, hi: float,
                            n: int = 2000) -> None:
    """sqrt(A) >= c (a alpha/2) t^(alpha-1) log^beta t and v <= f on a dense sample."""
    t = np.geomspace(max(lo, env.t_min + 1e-9), hi, n)
    lg = np.log(t) ** env.beta if env.beta else 1.0
    need = c * env.a * env.alpha / 2.0 * t ** (env.alpha - 1.0) * lg
    if np.any(np.sqrt(np.asarray(A(t))) < need * (1 - 1e-12)):
        raise PreconditionError("A is below the required growth rate")
    if np.any(np.asarray(v.log_value(t)) > np.asarray(env.log_value(t)) + 1e-12):
        raise PreconditionError("v exceeds the growth envelope")


def verify_gap_bound(v: CoefficientProfile, A: CoefficientProfile, env: GrowthEnvelope,
                     c: float, taus: Sequence[float], slack: float = 0.05,
                     track: SolutionTrack | None = None, **opts) -> GapVerification:
    """Largest T2/tau over the top decade of taus against the bound times (1 + slack)."""
    taus = np.sort(np.asarray(taus, dtype=float))
    check_growth_hypothesis(v, A, env, c, taus[0], taus[-1])
    bound = gap_bound(c, env.alpha)
    track = track or solve_for_gaps(v, A, taus, **opts)
    recs = gap_sweep(track, taus, c, env.alpha)
    top = [r.ratio for r in recs if r.tau >= taus[-1] / 10.0]
    observed = max(top)
    return GapVerification(observed, bound, observed <= bound * (1 + slack), recs)
