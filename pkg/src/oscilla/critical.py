"""Critical curves built from tail integrals of 1/v.

chi_R(t) = (2 v(t) \\int_t^R ds/v)^-2 is the borderline potential: its square root
integrates to minus one half the log of the tail integral, and is never
integrable at infinity.  Everything here works with the *scaled* tail
v(t) \\int_t^R ds/v, which stays O(1) even when v itself overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .coefficients import (CoefficientProfile, GrowthEnvelope, envelope_log_derivative,
                           envelope_profile)
from .errors import DivergenceError, DomainError, PreconditionError

T_MIN = 1e-8
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8
# tails of numerically integrated profiles are pushed well past the default
# tolerances so that derived logarithms stay accurate to ~1e-10
_INNER_EPSREL = 1e-12
_MAX_CHUNKS = 200


def _as_profile(source) -> CoefficientProfile:
    if isinstance(source, GrowthEnvelope):
        return envelope_profile(source)
    return source


def _log1p_ratio(x):
    """log1p(x)/x with the x -> 0 limit."""
    return math.log1p(x) / x if x > 1e-12 else 1.0 - 0.5 * x


def _closed_scaled_tail(v: CoefficientProfile, t: float, R: float):
    p = v.params
    if v.family == "euclidean":
        m = p["m"]
        if m == 2:
            return t * math.log(R / t) if math.isfinite(R) else math.inf
        return t * (1.0 - (t / R) ** (m - 2)) / (m - 2)
    if v.family == "hyperbolic" and not math.isfinite(R) and p["m"] in (2.0, 3.0):
        B = p["B"]
        u = math.exp(-B * t)
        if p["m"] == 2.0:
            return (1.0 + u) * _log1p_ratio(2.0 * u / (1.0 - u)) / B
        return 0.5 * (1.0 - u * u) / B
    exp_region = (v.family == "envelope" or (v.family == "superexp" and t >= 2.0))
    if exp_region and p["alpha"] == 1.0 and p["beta"] == 0.0:
        a = p["a"]
        return -math.expm1(-a * (R - t)) / a if math.isfinite(R) else 1.0 / a
    return None


def _integrand(v, t):
    lt = float(v.log_value(t))

    def g(s):
        return math.exp(lt - float(v.log_value(s)))
    return g


def _quad(g, lo, hi, points):
    pts = [p for p in points if lo < p < hi]
    val, err = integrate.quad(g, lo, hi, points=pts or None, limit=200,
                              epsabs=0.0, epsrel=_INNER_EPSREL)
    return val, err


def scaled_tail(source, t: float, R: float = math.inf) -> tuple[float, float]:
    """v(t) * int_t^R ds/v and an absolute error estimate; inf if divergent."""
    v = _as_profile(source)
    t = float(t)
    if t < T_MIN:
        raise DomainError(f"tail integrals are refused below t_min={T_MIN}")
    if R <= t:
        raise DomainError("tail integral needs t < R")
    if R > v.domain_end:
        raise DomainError(f"R={R} beyond the profile domain end {v.domain_end}")
    if not math.isfinite(R) and v.reciprocal_integrable is False:
        return math.inf, 0.0
    closed = _closed_scaled_tail(v, t, R)
    if closed is not None:
        return closed, 4e-16 * abs(closed)
    g = _integrand(v, t)
    brk = list(v.breakpoints(t, R))
    if math.isfinite(R):
        return _quad(g, t, R, brk)
    # unbounded range: geometric chunks until the relative contribution is negligible
    h = 1e-6 * max(t, 1.0)
    slope = (float(v.log_value(t + h)) - float(v.log_value(t))) / h
    width = min(max(t, 1.0), 8.0 / slope) if slope > 0 else max(t, 1.0)
    total, err, lo = 0.0, 0.0, t
    for _ in range(_MAX_CHUNKS):
        hi = lo + width
        val, e = _quad(g, lo, hi, brk)
        total += val
        err += e
        if val <= 1e-14 * total:
            return total, err
        lo, width = hi, 2.0 * width
    return math.inf, 0.0


def tail_integral(source, t: float, R: float = math.inf) -> float:
    """int_t^R ds/v; returns +inf when the integral diverges."""
    v = _as_profile(source)
    s, _ = scaled_tail(v, t, R)
    if not math.isfinite(s):
        return math.inf
    return math.exp(math.log(s) - float(v.log_value(t)))


def log_tail_integral(source, t: float, R: float = math.inf) -> tuple[float, float]:
    """log int_t^R ds/v with an absolute error bar; avoids under/overflow."""
    v = _as_profile(source)
    s, e = scaled_tail(v, t, R)
    if not math.isfinite(s):
        return math.inf, 0.0
    return math.log(s) - float(v.log_value(t)), e / s


def chi(source, t, R: float = math.inf):
    """(2 v(t) int_t^R ds/v)^-2; raises DivergenceError when the tail diverges."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(ts)
    for i, ti in enumerate(ts):
        s, _ = scaled_tail(source, ti, R)
        if not math.isfinite(s):
            raise DivergenceError("critical curve unavailable: 1/v is not integrable")
        out[i] = 0.25 / (s * s)
    return float(out[0]) if np.ndim(t) == 0 else out


def chi_f(env: GrowthEnvelope, t):
    """Critical curve of the growth envelope."""
    return chi(envelope_profile(env), t)


def chi_tilde_f(env: GrowthEnvelope, t):
    """(f'/(2f))^2, the explicit asymptotic proxy for chi_f."""
    out = (np.asarray(envelope_log_derivative(env, t)) / 2.0) ** 2
    return float(out) if np.ndim(t) == 0 else out


def sqrt_chi_integral(source, T: float, t: float, R: float = math.inf) -> tuple[float, float]:
    """Direct quadrature of sqrt(chi_R) over [T, t]."""
    v = _as_profile(source)
    brk = list(v.breakpoints(T, t))
    f = lambda s: math.sqrt(chi(v, s, R))
    val, err = integrate.quad(f, T, t, points=brk or None, limit=200,
                              epsabs=1e-13, epsrel=1e-11)
    return val, err


def log_tail_difference(source, T: float, t: float, R: float = math.inf) -> float:
    """-1/2 log int_t^R + 1/2 log int_T^R; equals the integral of sqrt(chi_R) on [T, t]."""
    a, _ = log_tail_integral(source, T, R)
    b, _ = log_tail_integral(source, t, R)
    return 0.5 * (a - b)


@dataclass
class CriticalCurve:
    """A critical curve bound to its source; ``variant`` selects chi, chi_f or chi_tilde_f."""

    source: object
    variant: str = "chi"
    R: float = math.inf

    def __post_init__(self):
        if self.variant not in ("chi", "chi_f", "chi_tilde_f"):
            raise PreconditionError(f"unknown critical variant {self.variant!r}")
        if self.variant != "chi" and not isinstance(self.source, GrowthEnvelope):
            raise PreconditionError(f"{self.variant} needs a GrowthEnvelope source")
        if self.variant == "chi":
            v = _as_profile(self.source)
            if not math.isfinite(self.R) and v.reciprocal_integrable is False:
                raise DivergenceError("critical curve unavailable: 1/v is not integrable")

    def __call__(self, t):
        if self.variant == "chi_tilde_f":
            return chi_tilde_f(self.source, t)
        return chi(self.source, t, self.R)

    def table(self, grid) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        return np.column_stack([grid, np.atleast_1d(self(grid))])


class LogTailTable:
    """Cached log tail integral of a profile on [lo, hi].

    The scaled tail v(t) int_t^inf ds/v is smooth and slowly varying, so it is
    tabulated on a geometric grid and interpolated with a cubic spline in log t;
    the exact log v is added back at evaluation time.
    """

    def __init__(self, source, lo: float, hi: float, n: int = 400):
        self.v = _as_profile(source)
        self.lo, self.hi = float(lo), float(hi)
        grid = np.geomspace(self.lo, self.hi, n)
        if self.v.reciprocal_integrable is False:
            raise DivergenceError("1/v is not integrable")
        closed = _closed_scaled_tail(self.v, self.lo, math.inf)
        self.exact = closed is not None and (
            self.v.family != "superexp" or self.lo >= 2.0)
        if not self.exact:
            s = np.array([scaled_tail(self.v, x)[0] for x in grid])
            self.spline = _interp(np.log(grid), np.log(s))

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.lo * (1 - 1e-12)):
            raise DomainError("LogTailTable evaluated below its range")
        if self.exact:
            s = np.log([_closed_scaled_tail(self.v, x, math.inf) for x in t])
        else:
            beyond = t > self.hi
            s = np.empty_like(t)
            s[~beyond] = self.spline(np.log(t[~beyond]))
            for i in np.nonzero(beyond)[0]:
                s[i] = math.log(scaled_tail(self.v, t[i])[0])
        return s - np.asarray(self.v.log_value(t))


def _interp(x, y):
    from scipy.interpolate import CubicSpline
    return CubicSpline(x, y)


def decay_rate_inf(source, r: float, log_tail=None) -> tuple[float, bool]:
    """inf over t > r of -1/2 log(int_t^inf ds/v) / (t - r).

    Returns the infimum and whether it is attained at finite t.  The search
    runs on a geometric offset grid and is refined by golden-section search.
    """
    v = _as_profile(source)
    if log_tail is None:
        def log_tail(x):
            x = np.atleast_1d(x)
            return np.array([log_tail_integral(v, xi)[0] for xi in x])
    lt_r = float(log_tail(np.array([r]))[0])
    if lt_r >= 0:
        raise PreconditionError(
            f"tail integral at r={r} is not below 1; choose a larger radius")
    scale = max(r, 1.0)
    grid = r + scale * np.geomspace(1e-4, 1e8, 241)
    ts, q = [], []
    for block in np.array_split(grid, 12):
        ts.extend(block)
        q.extend(-0.5 * log_tail(block) / (block - r))
        k = int(np.argmin(q))
        # stop once the ratio has clearly turned upward past its minimum
        if k < len(ts) - len(block) and q[-1] > 1.5 * q[k]:
            break
    ts, q = np.array(ts), np.array(q)
    k = int(np.argmin(q))
    if k == len(grid) - 1:
        return float(q[k]), False
    if k == 0:
        return float(q[0]), True

    def fq(x):
        return float(-0.5 * log_tail(np.array([x]))[0] / (x - r))
    res = optimize.minimize_scalar(fq, bracket=(ts[k - 1], ts[k], ts[k + 1]),
                                   method="golden", tol=1e-10)
    return float(min(res.fun, q[k])), True
