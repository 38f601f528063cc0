"""Integrator for (v z')' + A v z = 0 with z(0+) = z0, z' bounded at the origin.

The unknowns are z and the flux w = v z'.  Between grid nodes the pair obeys
z' = w / v, w' = -A v z, which is marched with 3-stage Gauss-Legendre
collocation (order 6).  The flux is carried relative to v at the left node of
each step, so profiles that overflow double precision (v = exp(t^2), say) only
ever enter through ratios.

Near a singular origin (v(0+) = 0) the coefficient is frozen at v(eps) on
(0, eps]; eps is halved until two consecutive solutions agree.  Every solve
finishes with an independent check of the integral equation
z(t) = z0 - int_0^t (1/v(s)) int_0^s A v z dx ds on the computed grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .coefficients import CoefficientProfile
from .errors import (HorizonError, ParameterError, PreconditionError, ResolutionError,
                     SolverAccuracyError)

_S15 = math.sqrt(15.0)
GL_C = np.array([0.5 - _S15 / 10, 0.5, 0.5 + _S15 / 10])
GL_B = np.array([5 / 18, 4 / 9, 5 / 18])
GL_A = np.array([
    [5 / 36, 2 / 9 - _S15 / 15, 5 / 36 - _S15 / 30],
    [5 / 36 + _S15 / 24, 2 / 9, 5 / 36 - _S15 / 24],
    [5 / 36 + _S15 / 30, 2 / 9 + _S15 / 15, 5 / 36],
])

# 6-point Gauss-Legendre rule on [0, 1] and its integration matrix, used by the
# residual check: QUAD_S[k, j] = int_0^{x_k} l_j, with l_j the Lagrange basis
_x, _w = np.polynomial.legendre.leggauss(6)
QUAD_X = 0.5 * (_x + 1.0)
QUAD_W = 0.5 * _w


def _integration_matrix(x):
    n = len(x)
    S = np.empty((n, n))
    for j in range(n):
        others = np.delete(x, j)
        poly = np.poly1d(others, r=True) / np.prod(x[j] - others)
        anti = poly.integ()
        S[:, j] = anti(x) - anti(0.0)
    return S


QUAD_S = _integration_matrix(QUAD_X)

# index helpers for assembling the stage systems in one shot
_J, _K = np.divmod(np.arange(9), 3)
_ROW_J, _COL_K = 2 * _J, 2 * _K
_A_FLAT = GL_A.ravel()
_DIAG = np.arange(6)


@dataclass(frozen=True)
class Zero:
    location: float
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass
class SolutionTrack:
    """Computed solution on an adaptive grid.

    ``dz`` holds the right derivative z'(t_i+); ``logv`` the log of the
    (regularized) coefficient at t_i+, so that the flux is dz * exp(logv).
    """

    grid: np.ndarray
    z: np.ndarray
    dz: np.ndarray
    logv: np.ndarray
    v: CoefficientProfile
    A: CoefficientProfile
    z0: float
    t0: float = 0.0
    flux0: float = 0.0
    eps: float | None = None
    eps_history: list = field(default_factory=list)
    zeros: list = field(default_factory=list)
    riccati: np.ndarray | None = None
    near_zero: np.ndarray | None = None
    residual: float = math.nan
    stability: float | None = None
    horizon: float = math.nan
    rtol: float = 1e-10

    @property
    def flux(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.dz * np.exp(self.logv)

    @property
    def zero_locations(self) -> np.ndarray:
        return np.array([zr.location for zr in self.zeros])

    @property
    def singular_start(self) -> bool:
        return self.eps is not None

    def evaluate(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Dense output: z(t) and z'(t+) by re-integrating from the nearest node."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.grid[0]) or np.any(t > self.grid[-1] * (1 + 1e-14)):
            raise ParameterError("dense evaluation outside the computed grid")
        idx = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, len(self.grid) - 2)
        sys = _System(self.v, self.A, self.eps)
        start = self.grid[idx]
        phi = _propagators(sys, start, t - start, self.logv[idx])
        zz = phi[:, 0, 0] * self.z[idx] + phi[:, 0, 1] * self.dz[idx]
        wh = phi[:, 1, 0] * self.z[idx] + phi[:, 1, 1] * self.dz[idx]
        with np.errstate(over="ignore", under="ignore"):
            dz = wh * np.exp(self.logv[idx] - sys.logv(t, side="left"))
        return zz, dz

    def riccati_at(self, t) -> np.ndarray:
        z, dz = self.evaluate(t)
        return _riccati(z, dz, _System(self.v, self.A, self.eps).logv(np.atleast_1d(t)))


class _System:
    """log v (frozen at v(eps) on (0, eps] when regularized) and A."""

    def __init__(self, v: CoefficientProfile, A: CoefficientProfile, eps: float | None):
        self.v, self.A, self.eps = v, A, eps

    def logv(self, t, side=None):
        t = np.asarray(t, dtype=float)
        if self.eps is not None:
            t = np.maximum(t, self.eps)
        out = np.empty_like(t)
        at_origin = t <= self.v.domain_start
        if np.any(at_origin):
            lim = self.v.origin_limit
            out[at_origin] = math.log(lim) if lim else -math.inf
        if np.any(~at_origin):
            out[~at_origin] = self.v.log_value(t[~at_origin], side=side)
        return out

    def a(self, t):
        return np.asarray(self.A(t), dtype=float)


def _propagators(sys: _System, t0, h, logV):
    """Gauss-Legendre transfer matrices for (z, w/V) over [t0, t0 + h]."""
    t0, h, logV = np.atleast_1d(t0), np.atleast_1d(h), np.atleast_1d(logV)
    n = t0.size
    ts = t0[:, None] + GL_C[None, :] * h[:, None]
    flat = ts.ravel()
    ok = h > 0
    lv = np.zeros_like(flat)
    av = np.zeros_like(flat)
    mask = np.repeat(ok, 3)
    if np.any(mask):
        lv[mask] = sys.logv(flat[mask])
        av[mask] = sys.a(flat[mask])
    ratio = np.exp(lv.reshape(n, 3) - logV[:, None])
    p = 1.0 / ratio
    q = av.reshape(n, 3) * ratio
    p[~ok] = 0.0
    q[~ok] = 0.0
    M = np.zeros((n, 6, 6))
    ha = h[:, None] * _A_FLAT[None, :]
    M[:, _ROW_J, _COL_K + 1] = -ha * p[:, _K]
    M[:, _ROW_J + 1, _COL_K] = ha * q[:, _K]
    M[:, _DIAG, _DIAG] += 1.0
    rhs = np.tile(np.eye(2), (3, 1))
    Y = np.linalg.solve(M, np.broadcast_to(rhs, (n, 6, 2)))
    phi = np.empty((n, 2, 2))
    phi[:, 0, :] = np.array([1.0, 0.0]) + h[:, None] * np.einsum(
        "nj,njc->nc", GL_B * p, Y[:, 1::2, :])
    phi[:, 1, :] = np.array([0.0, 1.0]) - h[:, None] * np.einsum(
        "nj,njc->nc", GL_B * q, Y[:, 0::2, :])
    return phi


@dataclass
class _March:
    grid: list
    z: list
    dz: list
    logv: list
    reason: str


def _march(sys: _System, t0, z0, dz0, horizon, forced, rtol, max_step,
           max_zeros=None, fixed_grid=None, max_steps=2_000_000) -> _March:
    """Adaptive (or replayed, when ``fixed_grid`` is given) step-doubling march."""
    logV = float(sys.logv(np.array([t0]), side="right")[0])
    grid, zs, dzs, lvs = [t0], [z0], [dz0], [logV]
    t, z, dz = t0, z0, dz0
    sign_changes = 0
    if fixed_grid is not None:
        targets = list(fixed_grid[1:])
    else:
        targets = sorted(set(float(x) for x in forced if t0 < x < horizon) | {horizon})
    h = targets[0] - t0 if fixed_grid is not None else min(
        max_step, 1e-3 * max(1.0, t0), targets[0] - t0)
    ti = 0
    for _ in range(max_steps):
        if ti >= len(targets):
            break
        target = targets[ti]
        if fixed_grid is not None:
            h = target - t
        h = min(h, target - t, max_step)
        # absorb slivers so that forced nodes are hit exactly
        if target - t - h < 1e-9 * h:
            h = target - t
        tt = np.array([t, t, t + 0.5 * h])
        hh = np.array([h, 0.5 * h, 0.5 * h])
        phi = _propagators(sys, tt, hh, np.full(3, logV))
        y = np.array([z, dz])
        full = phi[0] @ y
        half = phi[2] @ (phi[1] @ y)
        t_new = target if h == target - t else t + h
        lv_left = float(sys.logv(np.array([t_new]), side="left")[0])
        conv = math.exp(logV - lv_left)
        d0, d1 = abs(dz), abs(half[1] * conv)
        scale = max(abs(z), abs(half[0]), h * d0, h * d1)
        err = max(abs(full[0] - half[0]), h * abs(full[1] - half[1]) * conv)
        err = err / (rtol * scale + 1e-300)
        if fixed_grid is None and err > 1.0:
            h *= max(0.2, 0.9 * err ** (-1 / 7))
            if h < 1e-14 * max(1.0, t):
                raise SolverAccuracyError(f"step size underflow at t={t}")
            continue
        lv_right = float(sys.logv(np.array([t_new]), side="right")[0])
        z_new = half[0]
        dz_new = half[1] * math.exp(logV - lv_right)
        if z_new == 0.0 or z * z_new < 0:
            sign_changes += 1
        t, z, dz, logV = t_new, z_new, dz_new, lv_right
        grid.append(t)
        zs.append(z)
        dzs.append(dz)
        lvs.append(logV)
        if t >= target:
            ti += 1
        if max_zeros is not None and sign_changes >= max_zeros:
            return _March(grid, zs, dzs, lvs, "zeros")
        if fixed_grid is None:
            h *= min(4.0, max(0.2, 0.9 * max(err, 1e-12) ** (-1 / 7)))
    else:
        raise SolverAccuracyError("maximum number of steps exceeded")
    return _March(grid, zs, dzs, lvs, "horizon")


def _to_track(m: _March, v, A, z0, t0, flux0, eps, rtol, horizon) -> SolutionTrack:
    return SolutionTrack(np.array(m.grid), np.array(m.z), np.array(m.dz),
                         np.array(m.logv), v, A, z0, t0, flux0, eps,
                         rtol=rtol, horizon=horizon)


def integral_residual(track: SolutionTrack) -> np.ndarray:
    """z(t_i) - z0 + int_t0^t_i (1/v) (int_t0^s A v z - w0) ds on every node.

    Uses the true coefficient (no regularization), dense values of z at
    6-point Gauss nodes and the Lagrange integration matrix for the inner
    integral.
    """
    g = track.grid
    lo, h = g[:-1], np.diff(g)
    n = lo.size
    if n == 0:
        return np.zeros(1)
    pts = lo[:, None] + QUAD_X[None, :] * h[:, None]
    zq, _ = track.evaluate(pts.ravel())
    zq = zq.reshape(n, 6)
    true = _System(track.v, track.A, None)
    lv = true.logv(pts.ravel()).reshape(n, 6)
    av = true.a(pts.ravel()).reshape(n, 6)
    logS = lv[:, -1]
    rho = np.exp(lv - logS[:, None])
    gq = av * zq * rho
    inner = h[:, None] * (gq @ QUAD_S.T)
    outer_w = h[:, None] * QUAD_W[None, :] / rho
    F = -track.flux0 * math.exp(-logS[0])
    G = 0.0
    res = np.empty(n + 1)
    res[0] = 0.0
    decay = np.exp(logS[:-1] - logS[1:])
    for i in range(n):
        G += F * outer_w[i].sum() + outer_w[i] @ inner[i]
        res[i + 1] = track.z[i + 1] - track.z0 + G
        F = F + h[i] * (QUAD_W @ gq[i])
        if i + 1 < n:
            F *= decay[i]
    return res


def _forced_nodes(v, A, t0, horizon, extra=()):
    pts = set(float(x) for x in v.breakpoints(t0, horizon))
    pts |= set(float(x) for x in A.breakpoints(t0, horizon))
    pts |= set(float(x) for x in extra if t0 < x < horizon)
    return sorted(pts)


def solve_ivp(v: CoefficientProfile, A: CoefficientProfile, z0: float = 1.0,
              horizon: float = 100.0, *, t0: float = 0.0, flux0: float = 0.0,
              rtol: float = 1e-10, max_step: float = math.inf,
              max_zeros: int | None = None, refine_tol: float = 1e-9,
              eps0: float = 1e-4, residual_tol: float = 1e-6,
              stability_tol: float = 1e-6, max_halvings: int = 12,
              nodes: Sequence[float] = ()) -> SolutionTrack:
    """Solve the Cauchy problem on [t0, horizon].

    With t0 = 0 and v(0+) = 0 the origin is singular and the coefficient is
    regularized; otherwise (z, v z') = (z0, flux0) are imposed at t0.
    ``max_zeros`` stops the march once that many sign changes were seen.
    Raises SolverAccuracyError if the integral-equation residual exceeds
    residual_tol * z0 or the regularization never stabilizes.
    """
    if not z0 > 0:
        raise ParameterError("initial value z0 must be positive")
    if not horizon > t0:
        raise ParameterError("horizon must exceed the start point")
    if horizon > v.domain_end or horizon > A.domain_end:
        raise ParameterError("horizon beyond the coefficient domain")
    if rtol <= 0 or residual_tol <= 0 or refine_tol <= 0:
        raise ParameterError("tolerances must be positive")
    singular = t0 == 0.0 and not (v.origin_limit or 0.0) > 0
    if not singular:
        sys = _System(v, A, None)
        lv0 = float(sys.logv(np.array([t0]), side="right")[0])
        dz0 = flux0 / math.exp(lv0)
        forced = _forced_nodes(v, A, t0, horizon, nodes)
        m = _march(sys, t0, z0, dz0, horizon, forced, rtol, max_step, max_zeros)
        track = _to_track(m, v, A, z0, t0, flux0, None, rtol, horizon)
    else:
        if flux0 != 0.0:
            raise ParameterError("a singular origin forces zero initial flux")
        eps = min(eps0, 0.5 * v.monotone_end, 0.1 * horizon)
        forced = _forced_nodes(v, A, 0.0, horizon, list(nodes) + [eps])
        prev = _march(_System(v, A, eps), 0.0, z0, 0.0, horizon, forced, rtol,
                      max_step, max_zeros)
        history = []
        track = None
        for _ in range(max_halvings):
            eps *= 0.5
            grid = sorted(set(prev.grid) | {eps})
            cur = _march(_System(v, A, eps), 0.0, z0, 0.0, grid[-1], (), rtol,
                         max_step, None, fixed_grid=grid)
            common = np.isin(np.array(cur.grid), np.array(prev.grid))
            diff = float(np.max(np.abs(np.array(cur.z)[common] - np.array(prev.z))))
            history.append((eps, diff))
            prev = cur
            if diff < stability_tol * z0:
                track = _to_track(cur, v, A, z0, 0.0, 0.0, eps, rtol, horizon)
                track.residual = float(np.max(np.abs(integral_residual(track))))
                # the regularization error also enters the residual; keep halving
                # while it dominates
                if track.residual <= residual_tol * z0:
                    break
        if track is None:
            raise SolverAccuracyError(
                f"regularization did not stabilize: history {history}")
        track.eps_history = history
        track.stability = history[-1][1]
    if math.isnan(track.residual):
        track.residual = float(np.max(np.abs(integral_residual(track))))
    if track.residual > residual_tol * z0:
        raise SolverAccuracyError(
            f"integral-equation residual {track.residual:.3e} exceeds {residual_tol * z0:.1e}")
    track.zeros = find_zeros(track, refine_tol)
    return riccati_track(track)


def _riccati(z, dz, logv):
    with np.errstate(over="ignore", divide="ignore", invalid="ignore", under="ignore"):
        mag = np.exp(np.log(np.abs(dz)) + logv - np.log(np.abs(z)))
        y = -np.sign(dz) * np.sign(z) * mag
    y = np.where(dz == 0, 0.0, y)
    return y


def riccati_track(track: SolutionTrack, mask_factor: float = 1e-10) -> SolutionTrack:
    """Attach y = -v z'/z, masked (NaN) where z is negligible against its local size."""
    z, dz, g = track.z, track.dz, track.grid
    gaps = np.diff(g)
    spacing = np.maximum(np.r_[gaps, gaps[-1:]], np.r_[gaps[:1], gaps]) if gaps.size else np.ones(1)
    pad = np.abs(np.r_[z[:1], z, z[-1:]])
    local = np.maximum.reduce([pad[:-2], pad[1:-1], pad[2:], np.abs(dz) * spacing])
    near = np.abs(z) <= mask_factor * local
    y = _riccati(z, dz, track.logv)
    y = np.where(near, np.nan, y)
    return replace(track, riccati=y, near_zero=near)


def find_zeros(track: SolutionTrack, refine_tol: float = 1e-9,
               separation: float = 1e-4) -> list[Zero]:
    """Bisect every sign change of z down to a certified bracket of width refine_tol."""
    z, g = track.z, track.grid
    out: list[Zero] = []
    idx = np.nonzero((z[:-1] * z[1:] < 0) | (z[1:] == 0))[0]
    lo, hi = g[idx].copy(), g[idx + 1].copy()
    exact = z[idx + 1] == 0
    lo[exact] = hi[exact]
    s_lo = np.sign(z[idx])
    tol = np.maximum(refine_tol, 4 * np.spacing(hi))
    active = (hi - lo) > tol
    while np.any(active):
        mid = 0.5 * (lo[active] + hi[active])
        zm = track.evaluate(mid)[0]
        left = np.sign(zm) == s_lo[active]
        at = np.nonzero(active)[0]
        lo[at[left]] = mid[left]
        hi[at[~left]] = mid[~left]
        hit = zm == 0
        lo[at[hit]] = hi[at[hit]] = mid[hit]
        active = (hi - lo) > tol
    out = [Zero(0.5 * (a + b), a, b) for a, b in zip(lo, hi)]
    for a, b in zip(out, out[1:]):
        av = float(np.asarray(track.A(b.location)))
        if av > 0 and b.location - a.location < separation * math.pi / math.sqrt(av):
            raise ResolutionError(f"zeros at {a.location} and {b.location} are too close")
    return out


def extend_until_zeros(v, A, n_zeros: int, horizon: float, cap: float,
                       **opts) -> SolutionTrack:
    """Grow the horizon by 1.5x until n_zeros zeros are found or cap is exceeded."""
    while True:
        track = solve_ivp(v, A, horizon=horizon, max_zeros=n_zeros, **opts)
        if len(track.zeros) >= n_zeros:
            return track
        if horizon >= cap:
            raise HorizonError(f"only {len(track.zeros)} zeros below the cap {cap}")
        horizon = min(cap, 1.5 * horizon)


@dataclass
class SturmComparison:
    min_gap: float
    first_zero_1: float | None
    first_zero_2: float | None
    end: float
    track1: SolutionTrack
    track2: SolutionTrack


def sturm_compare(v, A1, A2, z0: float = 1.0, horizon: float = 100.0,
                  samples: int = 4000, **opts) -> SturmComparison:
    """Check z2 >= z1 up to the first zero of z1 when A1 >= A2."""
    lo = max(v.domain_start, A1.domain_start, A2.domain_start, 0.0)
    probe = np.unique(np.r_[np.geomspace(max(lo, 1e-6), horizon, samples // 2),
                            np.linspace(lo, horizon, samples // 2 + 1)[1:]])
    probe = probe[probe > lo]
    if np.any(np.asarray(A1(probe)) < np.asarray(A2(probe))):
        raise PreconditionError("Sturm comparison needs A1 >= A2")
    t1 = solve_ivp(v, A1, z0, horizon, max_zeros=1, **opts)
    end = t1.zeros[0].location if t1.zeros else horizon
    t2 = solve_ivp(v, A2, z0, horizon, **opts)
    pts = np.unique(np.r_[t1.grid, t2.grid])
    pts = pts[pts < end]
    z1, _ = t1.evaluate(pts)
    z2, _ = t2.evaluate(pts)
    first2 = t2.zeros[0].location if t2.zeros else None
    return SturmComparison(float(np.min(z2 - z1)), t1.zeros[0].location if t1.zeros else None,
                           first2, end, t1, t2)
