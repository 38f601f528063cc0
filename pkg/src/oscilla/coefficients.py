"""Coefficient profiles: volume densities v and potentials A on (0, R).

A profile is either a closed-form family (Euclidean, hyperbolic, the glued
super-exponential model, growth envelopes, capped potentials) or a sampled
table interpolated piecewise-linearly.  Both carry an explicit jump set;
at a jump the stored point value is the midpoint of the one-sided limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ParameterError

SIDES = (None, "left", "right")


@dataclass(frozen=True)
class Jump:
    """Discontinuity at ``t`` with one-sided limits ``left`` and ``right``."""

    t: float
    left: float
    right: float

    @property
    def value(self) -> float:
        return 0.5 * (self.left + self.right)


@dataclass(frozen=True)
class GrowthEnvelope:
    """f(t) = scale * exp(a * t**alpha * log(t)**beta)."""

    scale: float = 1.0
    a: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.scale > 0 and self.a > 0 and self.alpha > 0 and self.beta >= 0):
            raise ParameterError(
                f"envelope needs scale>0, a>0, alpha>0, beta>=0; got {self}")

    @property
    def t_min(self) -> float:
        return 1.0 if self.beta > 0 else 0.0

    def exponent(self, t):
        t = np.asarray(t, dtype=float)
        if self.beta == 0:
            return self.a * t ** self.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.a * t ** self.alpha * np.log(t) ** self.beta

    def log_value(self, t):
        _check_envelope_domain(self, t)
        return _scalarize(math.log(self.scale) + self.exponent(t), t)

    def __call__(self, t):
        return _scalarize(np.exp(np.asarray(self.log_value(t))), t)

    def log_derivative(self, t):
        return envelope_log_derivative(self, t)


def envelope_log_derivative(env: GrowthEnvelope, t):
    """f'/f = a t^(alpha-1) (alpha log^beta t + beta log^(beta-1) t), for t > 1."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 1.0):
        raise DomainError("envelope log-derivative is defined for t > 1 only")
    lg = np.log(arr)
    if env.beta == 0:
        core = env.alpha * np.ones_like(arr)
    else:
        core = env.alpha * lg ** env.beta + env.beta * lg ** (env.beta - 1.0)
    return _scalarize(env.a * arr ** (env.alpha - 1.0) * core, t)


def _check_envelope_domain(env, t):
    arr = np.asarray(t, dtype=float)
    lo = env.t_min
    if np.any(arr < lo) or (env.beta > 0 and np.any(arr <= lo)):
        raise DomainError(f"envelope evaluated below its domain start {lo}")


def _scalarize(out, like):
    out = np.asarray(out, dtype=float)
    if np.ndim(like) == 0:
        return float(out.reshape(-1)[0])
    return out


# ----------------------------------------------------------------------------
# closed-form families: each returns log-values on an array of t > 0

def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    small = x < 1.0
    out = np.empty_like(x)
    xs = x[small]
    # expm1 form keeps relative accuracy for tiny arguments
    out[small] = np.log(0.5 * (np.expm1(xs) - np.expm1(-xs)))
    xl = x[~small]
    out[~small] = xl + np.log1p(-np.exp(-2.0 * xl)) - math.log(2.0)
    return out


def _hermite_cubic(s, p0, d0, p1, d1):
    s2, s3 = s * s, s * s * s
    return ((2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * d0
            + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * d1)


def _hermite_derivative_min(p0, d0, p1, d1):
    """Minimum over [0, 1] of the derivative of the unit-interval Hermite cubic."""
    delta = p1 - p0
    c0, c1, c2 = d0, 6 * delta - 4 * d0 - 2 * d1, 3 * d0 + 3 * d1 - 6 * delta
    cands = [0.0, 1.0]
    if c2 != 0:
        s = -c1 / (2 * c2)
        if 0 < s < 1:
            cands.append(s)
    return min(c0 + c1 * s + c2 * s * s for s in cands)


def _superexp_bridge(m, a, alpha, beta):
    env = GrowthEnvelope(1.0, a, alpha, beta)
    p0, d0 = 0.0, float(m - 1)
    p1 = float(env.exponent(2.0))
    d1 = float(envelope_log_derivative(env, 2.0))
    return p0, d0, p1, d1


def _log_superexp(p, t):
    m, a, alpha, beta = p["m"], p["a"], p["alpha"], p["beta"]
    out = np.empty_like(t)
    lo = t <= 1.0
    hi = t >= 2.0
    mid = ~(lo | hi)
    with np.errstate(divide="ignore"):
        out[lo] = (m - 1) * np.log(t[lo])
    out[hi] = GrowthEnvelope(1.0, a, alpha, beta).exponent(t[hi])
    out[mid] = _hermite_cubic(t[mid] - 1.0, *p["bridge"])
    return out


def _log_envelope(p, t):
    env = GrowthEnvelope(p["scale"], p["a"], p["alpha"], p["beta"])
    return math.log(env.scale) + env.exponent(t)


def _capped(base: Callable, level: float, t_cap: float):
    def f(p, t):
        out = base(p, t)
        return np.where(t < t_cap, level, out)
    return f


def _growth_base(p, t):
    lg = np.log(t) ** p["beta"] if p["beta"] else 1.0
    return (p["c"] * p["a"] * p["alpha"] / 2.0 * t ** (p["alpha"] - 1.0) * lg) ** 2


_LOG_FAMILIES: dict[str, Callable] = {
    "euclidean": lambda p, t: (p["m"] - 1) * np.log(t),
    "hyperbolic": lambda p, t: (p["m"] - 1) * _log_sinh(p["B"] * t),
    "superexp": _log_superexp,
    "envelope": _log_envelope,
}

_VALUE_FAMILIES: dict[str, Callable] = {
    "zero": lambda p, t: np.zeros_like(t),
    "constant": lambda p, t: np.full_like(t, p["k"]),
    "euler": lambda p, t: p["H"] ** 2 / t ** 2,
    "coth": lambda p, t: (p["H"] * p["B"]) ** 2 / np.tanh(p["B"] * t),
    "power": lambda p, t: p["k"] * t ** (-p["p"]),
    "growth": _growth_base,
}


# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    """A coefficient on (domain_start, domain_end] with an explicit jump set.

    ``volume`` marks volume densities: these must be positive, vanish at the
    origin (when ``origin_limit`` is 0) and only jump downward.
    """

    family: str
    params: dict = field(default_factory=dict)
    volume: bool = False
    domain_start: float = 0.0
    domain_end: float = math.inf
    jumps: tuple[Jump, ...] = ()
    origin_limit: float | None = None
    monotone_end: float = math.inf
    reciprocal_integrable: bool | None = None
    breaks: tuple[float, ...] = ()

    def __post_init__(self):
        if self.volume:
            for j in self.jumps:
                if j.left < j.right:
                    raise ParameterError(
                        f"volume profiles may only jump downward; jump at {j.t} "
                        f"goes {j.left} -> {j.right}")
        ts = [j.t for j in self.jumps]
        if ts != sorted(ts) or len(set(ts)) != len(ts):
            raise ParameterError("jump locations must be strictly increasing")

    @property
    def kind(self) -> str:
        return "sampled_table" if self.family == "table" else "closed_form_family"

    def __repr__(self):
        shown = {k: v for k, v in self.params.items() if np.ndim(v) == 0 and k != "bridge"}
        return f"CoefficientProfile({self.family}, {shown})"

    def _check_domain(self, t):
        if t.size and (np.min(t) <= self.domain_start or np.max(t) > self.domain_end):
            raise DomainError(
                f"{self.family} profile evaluated outside "
                f"({self.domain_start}, {self.domain_end}]")

    def _raw(self, t, side):
        if self.family == "table":
            return _table_eval(self.params, self.jumps, t, side)
        if self.family == "euclidean":
            return t ** (self.params["m"] - 1)
        if self.family in _LOG_FAMILIES:
            with np.errstate(over="ignore"):
                return np.exp(_LOG_FAMILIES[self.family](self.params, t))
        return self.params["_value"](self.params, t)

    def _apply_jumps(self, t, out, side):
        for j in self.jumps:
            hit = t == j.t
            if np.any(hit):
                out[hit] = {None: j.value, "left": j.left, "right": j.right}[side]
        return out

    def __call__(self, t, side: str | None = None):
        if side not in SIDES:
            raise ParameterError(f"side must be one of {SIDES}")
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        self._check_domain(arr)
        out = np.array(self._raw(arr, side), dtype=float)
        out = self._apply_jumps(arr, out, side)
        return _scalarize(out, t)

    def log_value(self, t, side: str | None = None):
        """log of the profile; stays finite where the value itself overflows."""
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        self._check_domain(arr)
        if self.family in _LOG_FAMILIES and not self.jumps:
            return _scalarize(_LOG_FAMILIES[self.family](self.params, arr), t)
        with np.errstate(divide="ignore"):
            return _scalarize(np.log(np.atleast_1d(self(arr, side))), t)

    def breakpoints(self, lo: float = 0.0, hi: float = math.inf) -> np.ndarray:
        """Points in (lo, hi) where the profile is not smooth."""
        pts = sorted(set(self.breaks) | {j.t for j in self.jumps})
        return np.array([p for p in pts if lo < p < hi], dtype=float)


def _table_eval(params, jumps, t, side):
    pieces = params["pieces"]
    if not jumps:
        ts, vs = pieces[0]
        return np.interp(t, ts, vs)
    jt = np.array([j.t for j in jumps])
    idx = np.searchsorted(jt, t, side="left" if side == "left" else "right")
    out = np.empty_like(t)
    for k, (ts, vs) in enumerate(pieces):
        sel = idx == k
        out[sel] = np.interp(t[sel], ts, vs)
    return out


# ----------------------------------------------------------------------------
# constructors

def make_model(kind: str, m: float = 3, B: float = 1.0, a: float = 1.0,
               alpha: float = 1.0, beta: float = 0.0) -> CoefficientProfile:
    """Volume profile of a rotationally symmetric model manifold of dimension m."""
    if m < 2:
        raise ParameterError("dimension m must be at least 2")
    if kind == "euclidean":
        return CoefficientProfile("euclidean", {"m": float(m)}, volume=True,
                                  origin_limit=0.0, reciprocal_integrable=m > 2)
    if kind == "hyperbolic":
        if B <= 0:
            raise ParameterError("hyperbolic curvature scale B must be positive")
        return CoefficientProfile("hyperbolic", {"m": float(m), "B": float(B)},
                                  volume=True, origin_limit=0.0,
                                  reciprocal_integrable=True)
    if kind == "superexp":
        if a <= 0 or alpha < 1 or beta < 0:
            raise ParameterError("superexp needs a > 0, alpha >= 1, beta >= 0")
        bridge = _superexp_bridge(m, a, alpha, beta)
        if _hermite_derivative_min(*bridge) < 0:
            raise ParameterError(
                f"glue bridge on [1, 2] is not monotone for m={m}, a={a}, alpha={alpha}")
        params = {"m": float(m), "a": float(a), "alpha": float(alpha),
                  "beta": float(beta), "bridge": bridge}
        return CoefficientProfile("superexp", params, volume=True, origin_limit=0.0,
                                  reciprocal_integrable=True, breaks=(1.0, 2.0))
    raise ParameterError(f"unknown model kind {kind!r}")


def envelope_profile(env: GrowthEnvelope) -> CoefficientProfile:
    """The envelope itself as a (non-vanishing) coefficient profile."""
    params = {"scale": env.scale, "a": env.a, "alpha": env.alpha, "beta": env.beta}
    return CoefficientProfile("envelope", params, domain_start=env.t_min,
                              origin_limit=env.scale if env.beta == 0 else None,
                              reciprocal_integrable=True)


def exponential(a: float = 1.0) -> CoefficientProfile:
    """v(t) = exp(a t)."""
    return envelope_profile(GrowthEnvelope(1.0, a, 1.0, 0.0))


def constant(k: float) -> CoefficientProfile:
    if k < 0:
        raise ParameterError("constant coefficient must be nonnegative")
    params = {"k": float(k), "_value": _VALUE_FAMILIES["constant"]}
    return CoefficientProfile("constant", params, origin_limit=float(k),
                              reciprocal_integrable=False)


def _cap_profile(family, params, base, t_cap, level) -> CoefficientProfile:
    if t_cap <= 0:
        raise ParameterError("cap location must be positive")
    right = float(base(params, np.array([t_cap]))[0])
    jumps = () if math.isclose(level, right, rel_tol=1e-15) else (Jump(t_cap, level, right),)
    params = dict(params, t_cap=float(t_cap), level=float(level),
                  _value=_capped(base, level, t_cap))
    return CoefficientProfile(family, params, jumps=jumps, origin_limit=float(level),
                              breaks=(float(t_cap),))


def make_potential(kind: str, **kw) -> CoefficientProfile:
    """Potentials A used throughout the package.

    ``euler``  H^2/t^2 beyond t_cap, held below the Euclidean critical curve before it
    ``coth``   H^2 B^2 coth(Bt) beyond t_cap, held below the hyperbolic critical curve
    ``power``  k t^-p beyond t_cap, constant before it
    ``growth`` (c a alpha/2 t^(alpha-1) log^beta t)^2 beyond t_cap, constant before it
    ``constant`` and ``zero``
    """
    if kind == "zero":
        return CoefficientProfile("zero", {"_value": _VALUE_FAMILIES["zero"]},
                                  origin_limit=0.0)
    if kind == "constant":
        return constant(kw["k"])
    t_cap = float(kw.get("t_cap", 1.0))
    if kind == "euler":
        H, m = float(kw["H"]), float(kw.get("m", 3))
        if H < 0 or m <= 2:
            raise ParameterError("euler potential needs H >= 0 and m > 2")
        level = min(H ** 2, (m - 2) ** 2 / 4.0) / t_cap ** 2
        return _cap_profile("euler", {"H": H, "m": m}, _VALUE_FAMILIES["euler"],
                            t_cap, level)
    if kind == "coth":
        H, B, m = float(kw["H"]), float(kw.get("B", 1.0)), float(kw.get("m", 2))
        if H < 0 or B <= 0 or m < 2:
            raise ParameterError("coth potential needs H >= 0, B > 0, m >= 2")
        ct = 1.0 / math.tanh(B * t_cap)
        level = min(H ** 2, (m - 1) ** 2 / 4.0) * B ** 2 * ct
        return _cap_profile("coth", {"H": H, "B": B, "m": m}, _VALUE_FAMILIES["coth"],
                            t_cap, level)
    if kind == "power":
        k, p = float(kw["k"]), float(kw["p"])
        if k < 0:
            raise ParameterError("power potential needs k >= 0")
        return _cap_profile("power", {"k": k, "p": p}, _VALUE_FAMILIES["power"],
                            t_cap, k * t_cap ** (-p))
    if kind == "growth":
        env = kw.get("envelope") or GrowthEnvelope(1.0, kw.get("a", 1.0),
                                                   kw.get("alpha", 1.0), kw.get("beta", 0.0))
        c = float(kw["c"])
        if c <= 0:
            raise ParameterError("growth potential needs c > 0")
        if env.beta > 0 and t_cap <= 1:
            raise ParameterError("growth potential with beta > 0 needs t_cap > 1")
        params = {"a": env.a, "alpha": env.alpha, "beta": env.beta, "c": c}
        base = _VALUE_FAMILIES["growth"]
        level = float(base(params, np.array([t_cap]))[0])
        return _cap_profile("growth", params, base, t_cap, level)
    raise ParameterError(f"unknown potential kind {kind!r}")


def from_table(t: Sequence[float], values: Sequence[float],
               jumps: Sequence[tuple[float, float, float]] = (),
               volume: bool = True) -> CoefficientProfile:
    """Sampled table with piecewise-linear interpolation.

    ``jumps`` holds (t_j, left_limit, right_limit) triples.  Table rows sitting
    exactly on a jump are replaced by the declared one-sided limits.
    """
    ts = np.asarray(t, dtype=float)
    vs = np.asarray(values, dtype=float)
    if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2:
        raise ParameterError("table needs two equal-length columns with >= 2 rows")
    if np.any(np.diff(ts) <= 0):
        raise ParameterError("table abscissae must be strictly increasing")
    if np.any(vs < 0):
        raise ParameterError("coefficient tables must be nonnegative")
    js = tuple(Jump(float(a), float(b), float(c)) for a, b, c in sorted(jumps))
    for j in js:
        if not ts[0] < j.t < ts[-1]:
            raise ParameterError(f"jump at {j.t} lies outside the table")
    edges = [ts[0]] + [j.t for j in js] + [ts[-1]]
    pieces = []
    for k in range(len(edges) - 1):
        lo, hi = edges[k], edges[k + 1]
        inside = (ts > lo) & (ts < hi)
        pt, pv = list(ts[inside]), list(vs[inside])
        left_val = js[k - 1].right if k > 0 else vs[0]
        right_val = js[k].left if k < len(js) else vs[-1]
        pieces.append((np.array([lo] + pt + [hi]), np.array([left_val] + pv + [right_val])))
    if volume:
        if ts[0] != 0.0 or vs[0] != 0.0:
            raise ParameterError("volume tables must start at (0, 0)")
        if np.any(vs[1:] <= 0) or any(j.right <= 0 for j in js):
            raise ParameterError("volume tables must be positive away from the origin")
    start = 0.0 if ts[0] == 0.0 else float(ts[0])
    return CoefficientProfile(
        "table", {"pieces": tuple(pieces)}, volume=volume, domain_start=start,
        domain_end=float(ts[-1]), jumps=js,
        origin_limit=float(vs[0]) if ts[0] == 0.0 else None,
        monotone_end=_monotone_prefix(ts, vs), breaks=tuple(float(x) for x in ts[1:-1]))


def _monotone_prefix(ts, vs):
    dec = np.nonzero(np.diff(vs) < 0)[0]
    return float(ts[dec[0]]) if dec.size else math.inf


def read_table(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Two-column text table, whitespace or comma delimited, '#' comments."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ParameterError(f"{path}:{lineno}: expected two columns")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ParameterError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ParameterError(f"{path}: empty table")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]
