"""Spectral-radius bounds, index counts and a finite-difference eigenvalue oracle.

The upper bound uses the first nodal annulus of a solution of
(v z')' + A_eps v z = 0 started at R: the radial cutoff supported on that
annulus is a test function whose Rayleigh quotient bounds the bottom of the
spectrum outside the ball of radius R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .coefficients import CoefficientProfile, GrowthEnvelope, constant, envelope_profile, \
    from_table, make_potential
from .critical import LogTailTable, decay_rate_inf
from .errors import OracleError, ParameterError
from .volterra import QUAD_W, QUAD_X, SolutionTrack, extend_until_zeros, solve_ivp


@dataclass
class SpectralEstimate:
    R: float
    upper_bound: float = math.nan
    model_lower_bound: float = math.nan
    asymptotic_constant: float = math.nan
    fd_oracle_value: float = math.nan
    params: dict = field(default_factory=dict)
    track: SolutionTrack | None = field(default=None, repr=False, compare=False)

    def sandwich_ok(self, tol: float = 1e-3) -> bool:
        """lower <= fd <= upper (1 + tol), skipping whichever values are missing."""
        vals = [x for x in (self.model_lower_bound, self.fd_oracle_value) if math.isfinite(x)]
        if math.isfinite(self.upper_bound):
            vals.append(self.upper_bound * (1 + tol))
        return all(a <= b for a, b in zip(vals, vals[1:]))


# ----------------------------------------------------------------------------
# constants of the model example

class PrincipalConstant(NamedTuple):
    value: float
    c_star: float
    branch: str


def _stationary_c(alpha: float) -> float:
    """Root in (1, inf) of alpha c^2 - 4(alpha-1) c - alpha by safeguarded Newton."""
    g = lambda c: alpha * c * c - 4.0 * (alpha - 1.0) * c - alpha
    lo, hi = 1.0, 4.0 * (alpha - 1.0) / alpha + 2.0
    c = 0.5 * (lo + hi)
    for _ in range(200):
        gc = g(c)
        if gc == 0.0:
            return c
        if gc < 0:
            lo = c
        else:
            hi = c
        dg = 2.0 * alpha * c - 4.0 * (alpha - 1.0)
        nxt = c - gc / dg if dg > 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - c) <= 4e-16 * c:
            return nxt
        c = nxt
    return c


def principale_constant(a: float, alpha: float, beta: float = 0.0) -> PrincipalConstant:
    """Leading constant of the spectral-radius growth for exp(a r^alpha log^beta r) volumes.

    (a alpha/2)^2 min_{c>1} c^2 ((c+1)/(c-1))^(4(alpha-1)/alpha); the power of
    R (and of log R) it multiplies does not change the constant, so beta only
    enters through the caller's scaling.
    """
    if not a > 0:
        raise ParameterError("a must be positive")
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    if alpha < 1:
        return PrincipalConstant(0.0, math.nan, "alpha<1")
    if alpha == 1:
        return PrincipalConstant(a * a / 4.0, 1.0, "alpha=1")
    c = _stationary_c(alpha)
    k = (a * alpha / 2.0) ** 2 * c * c * ((c + 1.0) / (c - 1.0)) ** (4.0 * (alpha - 1.0) / alpha)
    return PrincipalConstant(k, c, "alpha>1")


def optimal_b(a: float, alpha: float, R: float) -> float:
    return a / 2.0 + (alpha - 1.0) / (2.0 * alpha * R ** alpha)


def lambda_b(b: float, a: float, alpha: float, r):
    """alpha^2 b (a - b) r^(2(alpha-1)) + alpha (alpha-1) b r^(alpha-2)."""
    r = np.asarray(r, dtype=float)
    out = alpha ** 2 * b * (a - b) * r ** (2 * (alpha - 1)) + alpha * (alpha - 1) * b * r ** (alpha - 2)
    return float(out) if out.ndim == 0 else out


def model_lower_bound(a: float, alpha: float, R: float, m: float = 3) -> SpectralEstimate:
    """Lower bound for the spectral radius outside B_R on the exp(a r^alpha) model.

    The reported value is alpha^2 (a^2/4 - ((alpha-1)^2/(4 alpha^2)) R^(-2 alpha)) R^(2(alpha-1));
    ``params['lambda_at_b_tilde']`` holds lambda_b evaluated at the optimal b.
    """
    if alpha < 1:
        raise ParameterError("model lower bound needs alpha >= 1")
    if not (a > 0 and R > 0):
        raise ParameterError("model lower bound needs a > 0 and R > 0")
    bt = optimal_b(a, alpha, R)
    if not 0 < bt < a:
        raise ParameterError(f"R={R} too small: optimal b={bt} is not inside (0, a)")
    val = alpha ** 2 * (a * a / 4.0 - (alpha - 1.0) ** 2 / (4.0 * alpha ** 2) * R ** (-2 * alpha)) \
        * R ** (2 * (alpha - 1))
    k = principale_constant(a, alpha)
    return SpectralEstimate(R, model_lower_bound=val, asymptotic_constant=k.value,
                            params={"a": a, "alpha": alpha, "beta": 0.0, "m": m,
                                    "b_tilde": bt, "c_star": k.c_star,
                                    "lambda_at_b_tilde": lambda_b(bt, a, alpha, R)})


# ----------------------------------------------------------------------------
# Rayleigh upper bound

def build_A_eps(source, R: float, hi: float, eps: float, n: int = 64) -> CoefficientProfile:
    """Sampled (inf_{t>r} -1/2 log(int_t^inf ds/f) / (t-r))^2 + eps on [R, hi]."""
    f = envelope_profile(source) if isinstance(source, GrowthEnvelope) else source
    table = LogTailTable(f, R, max(hi, 2.0 * R) * 4.0)
    rs = np.geomspace(R, hi, n)
    rate = np.array([decay_rate_inf(f, r, table)[0] for r in rs])
    vals = np.maximum.accumulate(rate ** 2) + eps
    return from_table(rs, vals, volume=False)


def _annulus_nodes(track: SolutionTrack, T1: float, T2: float):
    g = track.grid
    pts = np.unique(np.r_[T1, g[(g > T1) & (g < T2)], T2])
    h = np.diff(pts)
    t = (pts[:-1, None] + h[:, None] * QUAD_X[None, :]).ravel()
    w = (h[:, None] * QUAD_W[None, :]).ravel()
    return t, w


def rayleigh_quotient(track: SolutionTrack, T1: float, T2: float) -> tuple[float, float]:
    """int v z'^2 / int v z^2 over (T1, T2), and int A v z^2 / int v z^2."""
    t, w = _annulus_nodes(track, T1, T2)
    z, dz = track.evaluate(t)
    lv = np.asarray(track.v.log_value(t))
    wv = w * np.exp(lv - lv.max())
    den = np.sum(wv * z * z)
    return float(np.sum(wv * dz * dz) / den), float(np.sum(wv * np.asarray(track.A(t)) * z * z) / den)


def _nodal_annulus(v, A, R, horizon, cap, **opts):
    track = extend_until_zeros(v, A, 2, R + horizon, cap, t0=R, flux0=0.0, **opts)
    zl = track.zero_locations
    return track, float(zl[0]), float(zl[1])


def rayleigh_upper(v: CoefficientProfile, A_eps=None, R: float = 20.0, *,
                   eps: float = 1e-3, horizon: float | None = None,
                   cap: float | None = None, fd_n: int = 256, **opts) -> SpectralEstimate:
    """Upper bound for the spectral radius outside B_R from the first nodal annulus.

    ``A_eps`` is a potential profile or a GrowthEnvelope (the profile is then
    built from the envelope's tail decay rate plus eps).  When it is omitted
    the decay rate of v itself is used, and when 1/v is not integrable the
    bound is 0: the quotient is then at most eps for every eps > 0, and the
    evidence for eps and eps/10 is stored in ``params``.
    """
    span = horizon or max(4.0 * math.pi / math.sqrt(eps), R)
    cap = cap or R + 20.0 * span
    if A_eps is None and v.reciprocal_integrable is False:
        evidence = {}
        for e in (eps, eps / 10.0):
            track, T1, T2 = _nodal_annulus(v, constant(e), R, 4.0 * math.pi / math.sqrt(e),
                                           R + 40.0 * math.pi / math.sqrt(e), **opts)
            rq, _ = rayleigh_quotient(track, T1, T2)
            evidence[e] = rq
        return SpectralEstimate(R, upper_bound=0.0,
                                params={"branch": "eps", "rq_by_eps": evidence,
                                        "rq_below_eps": all(q <= e * (1 + 1e-6)
                                                            for e, q in evidence.items())})
    if A_eps is None or isinstance(A_eps, GrowthEnvelope):
        A = build_A_eps(A_eps or v, R, cap, eps)
    else:
        A = A_eps
    track, T1, T2 = _nodal_annulus(v, A, R, span, cap, **opts)
    rq, rq_pot = rayleigh_quotient(track, T1, T2)
    a_t2 = float(A(T2))
    fd = fd_eigenvalue_oracle(v, (T1, T2), fd_n) if fd_n else math.nan
    return SpectralEstimate(R, upper_bound=rq, fd_oracle_value=fd,
                            params={"branch": "annulus", "T1": T1, "T2": T2, "eps": eps,
                                    "A_eps_T2": a_t2, "rq_potential_form": rq_pot,
                                    "rq_below_A_T2": rq <= a_t2 * (1 + 1e-8)},
                            track=track)


# ----------------------------------------------------------------------------
# index

@dataclass
class IndexEstimate:
    r: np.ndarray
    count: np.ndarray
    rate: np.ndarray
    predicted_rate: float
    zeros: np.ndarray


def predicted_index_rate(c: float, alpha: float) -> float:
    if not c > 1:
        raise ParameterError("index rate needs c > 1")
    return alpha / (2.0 * math.log((c + 1.0) / (c - 1.0)))


def index_lower_bound(v: CoefficientProfile, envelope: GrowthEnvelope, c: float, r,
                      A: CoefficientProfile | None = None, **opts) -> IndexEstimate:
    """Count disjoint nodal annuli inside B_r; each adds one negative direction."""
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(rs <= 1):
        raise ParameterError("index radii must exceed 1")
    A = A or make_potential("growth", envelope=envelope, c=c,
                            t_cap=max(envelope.t_min, 1e-9) if envelope.beta == 0 else 2.0)
    track = solve_ivp(v, A, horizon=float(rs.max()), **opts)
    zl = track.zero_locations
    count = np.maximum(np.searchsorted(zl, rs, side="right") - 1, 0)
    return IndexEstimate(rs, count, count / np.log(rs),
                         predicted_index_rate(c, envelope.alpha), zl)


# ----------------------------------------------------------------------------
# finite-difference oracle

def _fd_matrix(v: CoefficientProfile, a: float, b: float, n: int):
    """Symmetric tridiagonal form of -(v z')' = lambda v z on n cells, Dirichlet ends."""
    h = (b - a) / n
    x = a + h * np.arange(1, n)
    xm = a + h * (np.arange(n) + 0.5)
    lx = np.asarray(v.log_value(x), dtype=float)
    lm = np.asarray(v.log_value(xm), dtype=float)
    d = (np.exp(lm[:-1] - lx) + np.exp(lm[1:] - lx)) / h ** 2
    e = -np.exp(lm[1:-1] - 0.5 * (lx[:-1] + lx[1:])) / h ** 2
    return d, e


def sturm_count(d: Sequence[float], e: Sequence[float], x: float) -> int:
    """Number of eigenvalues below x (signs of the LDL^T pivots)."""
    count = 0
    q = 1.0
    prev_e2 = 0.0
    for i in range(len(d)):
        q = d[i] - x - (prev_e2 / q if i else 0.0)
        if q == 0.0:
            q = -1e-300
        if q < 0:
            count += 1
        prev_e2 = e[i] * e[i] if i < len(e) else 0.0
    return count


def smallest_eigenvalue(d, e, tol: float = 1e-13, max_iter: int = 200) -> float:
    d, e = np.asarray(d), np.asarray(e)
    off = np.abs(np.r_[0.0, e]) + np.abs(np.r_[e, 0.0])
    lo, hi = float(np.min(d - off)), float(np.min(d + off))
    dl, el = d.tolist(), e.tolist()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if sturm_count(dl, el, mid) >= 1:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * max(1.0, abs(hi)):
            return 0.5 * (lo + hi)
    raise OracleError("Sturm bisection did not converge")


def fd_eigenvalue(v: CoefficientProfile, interval: tuple[float, float], n: int) -> float:
    a, b = map(float, interval)
    if n < 16:
        raise ParameterError("finite-difference grid needs n >= 16")
    if not b > a:
        raise ParameterError("empty interval")
    d, e = _fd_matrix(v, a, b, n)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise OracleError("coefficient is not bounded on the interval")
    return smallest_eigenvalue(d, e)


@dataclass
class FDLadder:
    n: tuple[int, int, int]
    values: tuple[float, float, float]
    extrapolated: float

    @property
    def ratio(self) -> float:
        l1, l2, l4 = self.values
        return abs(l1 - l2) / abs(l2 - l4) if l2 != l4 else math.inf


def fd_ladder(v: CoefficientProfile, interval, n: int = 256) -> FDLadder:
    vals = tuple(fd_eigenvalue(v, interval, k) for k in (n, 2 * n, 4 * n))
    l1, l2, l4 = vals
    scale = max(abs(l4), 1e-300)
    if abs(l2 - l4) > abs(l1 - l2) and abs(l1 - l2) > 1e-10 * scale:
        raise OracleError(f"finite-difference values are not converging: {vals}")
    return FDLadder((n, 2 * n, 4 * n), vals, (4.0 * l4 - l2) / 3.0)


def fd_eigenvalue_oracle(v: CoefficientProfile, interval, n: int = 256) -> float:
    """Richardson-extrapolated smallest Dirichlet eigenvalue on the interval."""
    return fd_ladder(v, interval, n).extrapolated
