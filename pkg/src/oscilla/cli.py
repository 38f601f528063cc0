"""Command-line front end: ``oscilla <subcommand> --config run.ini``.

Configs are INI files.  ``[coefficient]`` describes v, ``[potential]`` the
potential A, ``[envelope]`` an optional growth envelope, and one section per
subcommand carries its own parameters, for example::

    [coefficient]
    family = euclidean
    m = 3

    [potential]
    kind = euler
    H = 1
    m = 3

    [solve]
    horizon = 1e9
    max_zeros = 6

Grids are written ``geom:lo:hi:n``, ``lin:lo:hi:n`` or as a comma list.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import plots
from .acceptance import run_all
from .coefficients import (GrowthEnvelope, constant, envelope_profile, exponential,
                           from_table, make_model, make_potential, read_table)
from .critical import chi, chi_f, chi_tilde_f, tail_integral
from .criteria import (first_zero_test, hille_nehari_gap, oscillation_test,
                       sufficient_conditions)
from .errors import ConfigError, DivergenceError, OscillaError
from .gaps import LENGTH_FIELDS, gap_bound, gap_sweep, solve_for_gaps
from .spectral import (PrincipalConstant, model_lower_bound, principale_constant,
                       rayleigh_upper)
from .volterra import solve_ivp

COMMANDS = ("solve", "critical", "criteria", "gaps", "spectral", "verify")


# ----------------------------------------------------------------------------
# config handling

class Config:
    """INI config that remembers where each key was written."""

    def __init__(self, path: str):
        self.path = path
        self.base = os.path.dirname(os.path.abspath(path))
        self.cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        self.cp.optionxform = str
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
        try:
            self.cp.read_string(text, source=path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        self.lines = _key_lines(text)

    def where(self, section: str, key: str) -> str:
        line = self.lines.get((section, key))
        return f"{self.path}:{line}" if line else self.path

    def fail(self, section: str, key: str, msg: str):
        raise ConfigError(f"{self.where(section, key)}: [{section}] {key}: {msg}")

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return self.cp.has_section(section)
        return self.cp.has_option(section, key)

    def items(self, section: str) -> dict[str, str]:
        return dict(self.cp.items(section)) if self.cp.has_section(section) else {}

    def get(self, section, key, default=None):
        if self.has(section, key):
            return self.cp.get(section, key)
        if default is None:
            self.fail(section, key, "missing required field")
        return default

    def number(self, section, key, default=None, positive=False, integer=False):
        raw = self.get(section, key, None if default is None else str(default))
        try:
            val = int(raw) if integer else float(raw)
        except ValueError:
            self.fail(section, key, f"expected {'an integer' if integer else 'a number'}, got {raw!r}")
        if positive and not val > 0:
            self.fail(section, key, f"must be positive, got {raw}")
        return val

    def grid(self, section, key, default=None):
        raw = self.get(section, key, default)
        try:
            g = parse_grid(raw)
        except ValueError as exc:
            self.fail(section, key, str(exc))
        return g

    def numbers(self, section: str, skip=()) -> dict[str, float]:
        out = {}
        for k, raw in self.items(section).items():
            if k in skip:
                continue
            try:
                out[k] = float(raw)
            except ValueError:
                self.fail(section, k, f"expected a number, got {raw!r}")
        return out


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"\s*([^#;=:\s][^=:]*?)\s*[=:]", line)
        if m and section:
            lines[(section, m.group(1))] = no
    return lines


def parse_grid(raw: str) -> np.ndarray:
    raw = raw.strip()
    if raw.startswith(("geom:", "lin:")):
        kind, *parts = raw.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {raw!r} needs lo:hi:n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("grid needs at least one point")
        if kind == "geom" and not (lo > 0 and hi > 0):
            raise ValueError("geometric grid needs positive bounds")
        g = np.geomspace(lo, hi, n) if kind == "geom" else np.linspace(lo, hi, n)
    else:
        g = np.array([float(x) for x in raw.replace(",", " ").split()])
    if g.size == 0:
        raise ValueError("grid is empty")
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    return g


def _table_profile(cfg: Config, section: str, volume: bool):
    path = cfg.get(section, "table")
    full = path if os.path.isabs(path) else os.path.join(cfg.base, path)
    if not os.path.exists(full):
        cfg.fail(section, "table", f"table file {path!r} does not exist")
    try:
        t, vals = read_table(full)
    except OscillaError as exc:
        cfg.fail(section, "table", str(exc))
    jumps = []
    for item in cfg.get(section, "jumps", "").replace(",", " ").split():
        parts = item.split(":")
        if len(parts) != 3:
            cfg.fail(section, "jumps", f"jump {item!r} must be t:left:right")
        try:
            jumps.append(tuple(float(p) for p in parts))
        except ValueError:
            cfg.fail(section, "jumps", f"jump {item!r} is not numeric")
    return from_table(t, vals, jumps, volume=volume)


def build_envelope(cfg: Config) -> GrowthEnvelope | None:
    if not cfg.has("envelope"):
        return None
    p = cfg.numbers("envelope")
    try:
        return GrowthEnvelope(p.get("scale", 1.0), p.get("a", 1.0), p.get("alpha", 1.0),
                              p.get("beta", 0.0))
    except OscillaError as exc:
        raise ConfigError(f"{cfg.path}: [envelope]: {exc}") from None


def build_coefficient(cfg: Config):
    sec = "coefficient"
    family = cfg.get(sec, "family")
    if family == "table":
        return _table_profile(cfg, sec, volume=True)
    p = cfg.numbers(sec, skip=("family",))
    try:
        if family in ("euclidean", "hyperbolic", "superexp"):
            return make_model(family, **p)
        if family == "exponential":
            return exponential(p.get("a", 1.0))
        if family == "constant":
            return constant(p.get("k", 1.0))
        if family == "envelope":
            env = build_envelope(cfg)
            if env is None:
                cfg.fail(sec, "family", "envelope family needs an [envelope] section")
            return envelope_profile(env)
    except TypeError as exc:
        cfg.fail(sec, "family", f"bad parameters: {exc}")
    except OscillaError as exc:
        cfg.fail(sec, "family", str(exc))
    cfg.fail(sec, "family", f"unknown family {family!r}")


def build_potential(cfg: Config):
    sec = "potential"
    kind = cfg.get(sec, "kind")
    if kind == "table":
        return _table_profile(cfg, sec, volume=False)
    p = cfg.numbers(sec, skip=("kind",))
    if kind == "growth":
        env = build_envelope(cfg)
        if env is not None:
            p["envelope"] = env
    try:
        return make_potential(kind, **p)
    except KeyError as exc:
        cfg.fail(sec, "kind", f"{kind} potential needs field {exc.args[0]}")
    except OscillaError as exc:
        cfg.fail(sec, "kind", str(exc))


# ----------------------------------------------------------------------------
# output

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: str, header, rows) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def _solver_opts(cfg: Config, section: str) -> dict:
    opts = {}
    for key in ("rtol", "residual_tol", "stability_tol", "refine_tol", "eps0"):
        if cfg.has(section, key):
            opts[key] = cfg.number(section, key, positive=True)
    return opts


# ----------------------------------------------------------------------------
# subcommands

def cmd_solve(cfg: Config, args) -> list[str]:
    v, A = build_coefficient(cfg), build_potential(cfg)
    sec = "solve"
    z0 = cfg.number(sec, "z0", 1.0, positive=True)
    horizon = cfg.number(sec, "horizon", positive=True)
    max_zeros = cfg.number(sec, "max_zeros", 0, integer=True) or None
    track = solve_ivp(v, A, z0, horizon, max_zeros=max_zeros, **_solver_opts(cfg, sec))
    out = [write_csv(os.path.join(args.out, "track.csv"),
                     ("t", "z", "flux", "y", "is_near_zero"),
                     zip(track.grid, track.z, track.flux, track.riccati, track.near_zero))]
    zl = track.zero_locations
    ratio = np.r_[np.nan, zl[1:] / zl[:-1]] if zl.size else zl
    out.append(write_csv(os.path.join(args.out, "zeros.csv"),
                         ("index", "location", "bracket_width", "ratio"),
                         ((k, z.location, z.width, r) for k, (z, r)
                          in enumerate(zip(track.zeros, ratio), 1))))
    if args.figures:
        out.append(plots.track_figure(track, plots.figure_path(out[0])))
    print(f"zeros: {len(zl)}  residual: {track.residual:.2e}")
    return out


def cmd_critical(cfg: Config, args) -> list[str]:
    v = build_coefficient(cfg)
    env = build_envelope(cfg)
    grid = cfg.grid("critical", "grid")
    # sampled tables end at their last row; the tail integral stops there
    R = cfg.number("critical", "R", v.domain_end, positive=True)
    if R > v.domain_end:
        cfg.fail("critical", "R", f"beyond the coefficient domain end {v.domain_end}")
    rows = []
    for t in grid:
        if t >= R:
            rows.append((t, math.nan, math.nan, math.nan, math.nan))
            continue
        tail = tail_integral(v, t, R)
        try:
            c = chi(v, t, R)
        except DivergenceError:
            c = math.nan
        cf = chi_f(env, t) if env and t > env.t_min else math.nan
        ct = chi_tilde_f(env, t) if env and t > max(env.t_min, 1.0) else math.nan
        rows.append((t, c, cf, ct, tail))
    path = write_csv(os.path.join(args.out, "critical.csv"),
                     ("t", "chi", "chi_f", "chi_tilde_f", "tail_integral"), rows)
    out = [path]
    if args.figures:
        arr = np.array(rows, dtype=float)
        out.append(plots.critical_figure(arr[:, 0], {"chi": arr[:, 1], "chi_f": arr[:, 2],
                                                     "chi_tilde_f": arr[:, 3]},
                                         plots.figure_path(path)))
    return out


def cmd_criteria(cfg: Config, args) -> list[str]:
    v, A = build_coefficient(cfg), build_potential(cfg)
    env = build_envelope(cfg)
    sec = "criteria"
    horizon = cfg.number(sec, "horizon", positive=True)
    T = cfg.number(sec, "T", 1.0, positive=True)
    margin = cfg.number(sec, "margin", 1e-3, positive=True)
    threshold = cfg.number(sec, "threshold", 10.0, positive=True)
    report = {}
    if cfg.has(sec, "t"):
        report["first_zero"] = first_zero_test(v, A, cfg.number(sec, "t", positive=True)).to_dict()
    osc, tab = oscillation_test(v, A, horizon, T, threshold)
    report["oscillation"] = osc.to_dict()
    if v.reciprocal_integrable or env is not None:
        items = sufficient_conditions(v, A, horizon, T, env, margin, threshold,
                                      tab if v.reciprocal_integrable else None)
        report["sufficient_conditions"] = [r.to_dict() for r in items]
    if v.reciprocal_integrable:
        report["hille_nehari"] = hille_nehari_gap(v, A, horizon, T, margin, tab).to_dict()
    rpath = os.path.join(args.out, "report.json")
    with open(rpath, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    cols = tab.columns(A)
    path = write_csv(os.path.join(args.out, "running.csv"), tuple(cols),
                     zip(*cols.values()))
    out = [rpath, path]
    if args.figures:
        out.append(plots.running_figure(cols, plots.figure_path(path)))
    print(f"oscillation: {osc.verdict}")
    return out


def cmd_gaps(cfg: Config, args) -> list[str]:
    v, A = build_coefficient(cfg), build_potential(cfg)
    sec = "gaps"
    taus = cfg.grid(sec, "taus")
    c = cfg.number(sec, "c", math.nan)
    env = build_envelope(cfg)
    alpha = env.alpha if env else cfg.number(sec, "alpha", math.nan)
    level = cfg.number(sec, "level", 1.0, positive=True)
    bound = gap_bound(c, alpha) if c > 1 and alpha > 0 else math.nan
    track = solve_for_gaps(v, A, taus, **_solver_opts(cfg, sec))
    with ThreadPoolExecutor(args.threads) as ex:
        recs = gap_sweep(track, taus, c, alpha, level, executor=ex if args.threads > 1 else None)
    path = write_csv(os.path.join(args.out, "gaps.csv"),
                     ("tau", "T1", "T2", "ratio") + LENGTH_FIELDS + ("bound",),
                     ((r.tau, r.T1, r.T2, r.ratio, *r.lengths, bound) for r in recs))
    out = [path]
    if args.figures:
        out.append(plots.gaps_figure(recs, bound, plots.figure_path(path)))
    return out


def _spectral_row(v, env, R, eps, fd_n):
    lower = math.nan
    p = v.params
    if v.family == "superexp" and p.get("beta", 0.0) == 0.0 and p["alpha"] >= 1:
        lower = model_lower_bound(p["a"], p["alpha"], R, p["m"]).model_lower_bound
    up = rayleigh_upper(v, env, R, eps=eps, fd_n=fd_n)
    return up, lower


def cmd_spectral(cfg: Config, args) -> list[str]:
    v = build_coefficient(cfg)
    env = build_envelope(cfg)
    sec = "spectral"
    Rs = cfg.grid(sec, "R")
    eps = cfg.number(sec, "eps", 1e-3, positive=True)
    fd_n = cfg.number(sec, "fd_n", 256, integer=True)
    if fd_n < 16:
        cfg.fail(sec, "fd_n", "must be at least 16")
    src = env or (GrowthEnvelope(1.0, v.params["a"], v.params["alpha"], v.params["beta"])
                  if v.family == "superexp" else None)
    k = (principale_constant(src.a, src.alpha, src.beta) if src is not None
         else PrincipalConstant(math.nan, math.nan, "n/a"))
    with ThreadPoolExecutor(args.threads) as ex:
        results = list(ex.map(lambda R: _spectral_row(v, src, R, eps, fd_n), Rs))
    rows = [{"R": R, "lower": lo, "upper": up.upper_bound, "fd": up.fd_oracle_value,
             "constant": k.value, "c_star": k.c_star} for R, (up, lo) in zip(Rs, results)]
    header = ("R", "lower", "upper", "fd", "constant", "c_star")
    path = write_csv(os.path.join(args.out, "spectral.csv"), header,
                     ([r[h] for h in header] for r in rows))
    out = [path]
    if args.figures:
        out.append(plots.spectral_figure(rows, plots.figure_path(path)))
    return out


def cmd_verify(cfg, args) -> list[str]:
    results = run_all(args.seed)
    for r in results:
        print(r.line())
    path = write_csv(os.path.join(args.out, "acceptance.csv"),
                     ("number", "name", "passed", "seconds", "detail"),
                     ((r.number, r.name, r.passed, round(r.seconds, 2), r.detail)
                      for r in results))
    npass = sum(r.passed for r in results)
    print(f"{npass}/{len(results)} criteria passed")
    if npass != len(results):
        print(path)
        raise SystemExit(1)
    return [path]


HANDLERS = {"solve": cmd_solve, "critical": cmd_critical, "criteria": cmd_criteria,
            "gaps": cmd_gaps, "spectral": cmd_spectral, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oscilla",
                                     description="Oscillation, gap and spectral experiments.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="INI experiment config (not needed for verify)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for grid sweeps")
    parser.add_argument("--no-figures", dest="figures", action="store_false",
                        help="write CSV/JSON only, skip the PNG figures")
    return parser


def run(command: str, config: str | None, out: str = ".", seed: int = 0,
        threads: int = 1, figures: bool = True) -> list[str]:
    args = argparse.Namespace(command=command, config=config, out=out, seed=seed,
                              threads=max(1, threads), figures=figures)
    if command not in HANDLERS:
        raise ConfigError(f"unknown subcommand {command!r}")
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    cfg = None
    if command != "verify":
        if not config:
            raise ConfigError(f"{command} needs --config")
        cfg = Config(config)
    os.makedirs(out, exist_ok=True)
    return HANDLERS[command](cfg, args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = run(args.command, args.config, args.out, args.seed, args.threads, args.figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OscillaError as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
