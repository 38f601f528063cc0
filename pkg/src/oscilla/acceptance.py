"""End-to-end acceptance checks with independent closed-form oracles."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .coefficients import GrowthEnvelope, exponential, from_table, make_model, make_potential
from .critical import log_tail_difference, sqrt_chi_integral
from .criteria import sufficient_conditions
from .gaps import gap_bound, gap_sweep, solve_for_gaps
from .spectral import (fd_eigenvalue_oracle, index_lower_bound, model_lower_bound,
                       principale_constant, rayleigh_upper)
from .volterra import SolutionTrack, solve_ivp, sturm_compare

EULER_RATIO = math.exp(2 * math.pi / math.sqrt(3))
EXP_SPACING = 2 * math.pi / math.sqrt(3)


@dataclass
class AcceptanceResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = math.inf

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number}. {self.name}: {self.detail} ({self.seconds:.2f}s)"


@dataclass
class Context:
    """Tracks produced by the criteria, re-audited by the solver-integrity check."""

    seed: int = 0
    tracks: list = field(default_factory=list)

    def keep(self, *tracks: SolutionTrack):
        self.tracks.extend(tracks)
        return tracks[0] if len(tracks) == 1 else tracks


def euler_dichotomy(ctx: Context) -> tuple[bool, str]:
    v = make_model("euclidean", m=3)
    low = ctx.keep(solve_ivp(v, make_potential("euler", H=0.4, m=3), 1.0, 1e3))
    high = ctx.keep(solve_ivp(v, make_potential("euler", H=1.0, m=3), 1.0, 1e9, max_zeros=6))
    zl = high.zero_locations
    ratios = zl[1:] / zl[:-1]
    err = float(np.max(np.abs(ratios / EULER_RATIO - 1))) if ratios.size else math.inf
    ok = len(low.zeros) == 0 and len(zl) >= 5 and err < 0.01
    return ok, (f"H=0.4 zeros={len(low.zeros)}, H=1 zeros={len(zl)}, "
                f"ratio rel err={err:.2e}")


def hyperbolic_dichotomy(ctx: Context) -> tuple[bool, str]:
    v = make_model("hyperbolic", m=2, B=1.0)
    low = ctx.keep(solve_ivp(v, make_potential("coth", H=0.45, B=1.0, m=2), 1.0, 200.0))
    A = make_potential("coth", H=0.6, B=1.0, m=2)
    high = ctx.keep(solve_ivp(v, A, 1.0, 200.0))
    item = next(r for r in sufficient_conditions(v, A, 200.0) if r.id == "iii")
    ok = (len(low.zeros) == 0 and float(np.min(low.z)) > 0 and len(high.zeros) >= 2
          and abs(item.lhs / 1.2 - 1) < 0.02)
    return ok, (f"H=0.45 min z={np.min(low.z):.3g}, H=0.6 zeros={len(high.zeros)}, "
                f"ratio={item.lhs:.5f}")


def constant_coefficient_gaps(ctx: Context) -> tuple[bool, str]:
    v, A = exponential(), make_potential("constant", k=1.0)
    taus = np.linspace(50.0, 500.0, 46)
    track = ctx.keep(solve_for_gaps(v, A, taus))
    spacing = np.diff(track.zero_locations)
    sp_err = float(np.max(np.abs(spacing / EXP_SPACING - 1)))
    recs = gap_sweep(track, taus, c=2.0, alpha=1.0)
    top = max(r.ratio for r in recs if r.tau >= taus[-1] / 10)
    bound = gap_bound(2.0, 1.0)
    last = recs[-1].ratio
    shrinking = last <= 1 + 2 * EXP_SPACING / taus[-1] and last < recs[0].ratio
    ok = sp_err < 1e-3 and top <= bound and shrinking
    return ok, (f"spacing rel err={sp_err:.1e}, max T2/tau={top:.4f} <= {bound:g}, "
                f"T2/tau at tau={taus[-1]:g}: {last:.4f}")


def principal_constant_check(ctx: Context) -> tuple[bool, str]:
    k = principale_constant(1.0, 2.0)
    k1 = principale_constant(3.0, 1.0)
    ok = (abs(k.value - (17 + 12 * math.sqrt(2))) < 1e-9
          and abs(k.c_star - (1 + math.sqrt(2))) < 1e-12 and k1.value == 9.0 / 4.0)
    return ok, f"constant={k.value:.12f}, c*={k.c_star:.12f}, alpha=1 gives {k1.value}"


def spectral_sandwich(ctx: Context) -> tuple[bool, str]:
    v = make_model("superexp", m=3, a=1.0, alpha=1.0)
    env = GrowthEnvelope(1.0, 1.0, 1.0, 0.0)
    worst = 0.0
    lows = []
    for R in (20.0, 35.0, 50.0):
        low = model_lower_bound(1.0, 1.0, R, m=3).model_lower_bound
        up = rayleigh_upper(v, env, R)
        ctx.keep(up.track)
        fd = fd_eigenvalue_oracle(v, (R, R + 40.0), 512)
        lows.append(low)
        worst = max(worst, abs(up.upper_bound / 0.25 - 1), abs(fd / 0.25 - 1))
        if not up.params["rq_below_A_T2"]:
            return False, f"Rayleigh quotient above A_eps(T2) at R={R}"
    ok = all(x == 0.25 for x in lows) and worst < 0.05
    return ok, f"lower bounds={lows}, worst rel dev of upper/fd from 1/4={worst:.3%}"


def sturm_suite(ctx: Context, pairs: int = 50) -> tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    worst = math.inf
    for _ in range(pairs):
        m = int(rng.choice([3, 4, 5]))
        t_cap = float(rng.uniform(1.0, 3.0))
        p1 = float(rng.uniform(0.0, 2.0))
        p2 = float(rng.uniform(p1, 2.5))
        k1 = float(rng.uniform(0.5, 20.0))
        k2 = float(rng.uniform(0.0, k1))
        A1 = make_potential("power", k=k1, p=p1, t_cap=t_cap)
        A2 = make_potential("power", k=k2, p=p2, t_cap=t_cap)
        cmp = sturm_compare(make_model("euclidean", m=m), A1, A2, 1.0, 60.0)
        ctx.keep(cmp.track1, cmp.track2)
        worst = min(worst, cmp.min_gap)
    return worst >= -1e-6, f"{pairs} pairs, min(z2 - z1)={worst:.3e}"


def jump_profile_track(z0: float = 1.0) -> SolutionTrack:
    """Volume table with a downward jump at t=2 (stored value is the midpoint)."""
    t = np.linspace(0.0, 4.0, 81)
    vals = t ** 2
    vals[t > 2.0] *= 0.5
    v = from_table(t, vals, jumps=[(2.0, 4.0, 2.0)])
    return solve_ivp(v, make_potential("constant", k=2.0), z0, 4.0, nodes=(2.0,))


def solver_integrity(ctx: Context) -> tuple[bool, str]:
    bad = [tr for tr in ctx.tracks
           if not tr.residual <= 1e-6 * tr.z0
           or (tr.stability is not None and not tr.stability <= 1e-6 * tr.z0)]
    worst = max((tr.residual / tr.z0 for tr in ctx.tracks), default=0.0)
    jt = jump_profile_track()
    d = 1e-7
    (zl, zr), _ = jt.evaluate(np.array([2.0 - d, 2.0 + d]))
    fl = jt.flux
    k = int(np.searchsorted(jt.grid, 2.0))
    flux_jump = abs(fl[k] - fl[k - 1])
    bound = 2.0 * 4.0 * float(np.max(np.abs(jt.z))) * (jt.grid[k] - jt.grid[k - 1])
    steps = np.diff(jt.grid)
    lip = float(np.max(np.abs(np.diff(fl)) / steps)) / (2.0 * 4.0 * float(np.max(np.abs(jt.z))))
    stored = float(jt.v(2.0))
    ok = (not bad and abs(zl - zr) < 1e-5 and flux_jump <= bound and lip <= 1.0 + 1e-6
          and stored == 3.0)
    return ok, (f"{len(ctx.tracks)} tracks, worst residual={worst:.1e}, failing={len(bad)}; "
                f"jump: |dz|={abs(zl - zr):.1e}, flux Lipschitz ratio={lip:.3f}, "
                f"stored v={stored}")


def index_growth(ctx: Context) -> tuple[bool, str]:
    env = GrowthEnvelope(1.0, 1.0, 1.0, 0.0)
    r = np.geomspace(50.0, 500.0, 11)
    est = index_lower_bound(exponential(), env, 2.0, r, A=make_potential("constant", k=1.0))
    low = float(np.min(est.rate))
    return bool(np.all(est.rate > est.predicted_rate)), (
        f"min count/log r={low:.3f} vs predicted {est.predicted_rate:.3f}")


def critical_identity(ctx: Context) -> tuple[bool, str]:
    profiles = {
        "euclidean m=4": make_model("euclidean", m=4),
        "hyperbolic m=3": make_model("hyperbolic", m=3, B=1.0),
        "superexp": make_model("superexp", m=3, a=1.0, alpha=1.5),
    }
    worst, grow_min = 0.0, math.inf
    for v in profiles.values():
        for T, t in ((0.5, 1.7), (1.2, 3.0), (2.5, 9.0)):
            direct, _ = sqrt_chi_integral(v, T, t)
            worst = max(worst, abs(direct - log_tail_difference(v, T, t)))
        ts = [1.0, 10.0, 100.0, 1000.0]
        inc = [log_tail_difference(v, a, b) for a, b in zip(ts, ts[1:])]
        grow_min = min(grow_min, min(inc))
    ok = worst <= 1e-7 and grow_min > 0.1
    return ok, (f"max |quadrature - identity|={worst:.1e}, "
                f"smallest per-decade growth={grow_min:.3f}")


CRITERIA = [
    (1, "Euler dichotomy", euler_dichotomy, 10.0),
    (2, "Hyperbolic dichotomy", hyperbolic_dichotomy, 10.0),
    (3, "Constant-coefficient gaps", constant_coefficient_gaps, 10.0),
    (4, "Principal constant", principal_constant_check, math.inf),
    (5, "Spectral sandwich", spectral_sandwich, 60.0),
    (6, "Sturm comparison suite", sturm_suite, 60.0),
    (7, "Solver integrity", solver_integrity, math.inf),
    (8, "Index growth", index_growth, math.inf),
    (9, "Critical identity", critical_identity, math.inf),
]


def run_criterion(number: int, ctx: Context) -> AcceptanceResult:
    num, name, fn, budget = CRITERIA[number - 1]
    t0 = time.perf_counter()
    try:
        ok, detail = fn(ctx)
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if dt > budget:
        ok, detail = False, f"{detail}; over the {budget:g}s budget"
    return AcceptanceResult(num, name, bool(ok), detail, dt, budget)


def run_all(seed: int = 0, only=None) -> list[AcceptanceResult]:
    ctx = Context(seed)
    return [run_criterion(n, ctx) for n, *_ in CRITERIA if only is None or n in only]
