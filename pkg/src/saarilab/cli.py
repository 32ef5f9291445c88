"""Command-line front end.

Exit codes: 0 ok, 2 parse error, 3 integration failure, 4 empty result,
5 acceptance breach.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .central_config import ShapeChart, critical_measures, equilateral_config, euler_collinear
from .checks import (
    equilateral_limits,
    rho2_fit_critical_path,
    richardson,
    series_fit_critical_path,
    series_limits_on_path,
)
from .contour import Window, critical_path_contour
from .dynamics import MassSystem
from .errors import EmptyContour, SaariLabError, ToleranceFailure
from .integrate import PhiProfile, dphi_dI, integrate, phi_of_I, turning_points
from .scenario import Scenario, ScenarioError

EXIT_OK, EXIT_PARSE, EXIT_INTEGRATION, EXIT_EMPTY, EXIT_BREACH = 0, 2, 3, 4, 5

#: reference values for the series check
SERIES_REFERENCE = {
    "c2": 29 / 7,
    "c4": -7491 / 343,
    "rho2_c2": 58.0,
    "limit_fOverRho": -7491 / (1624 * math.sqrt(2)),
    "equilateral_limit": 13.5,
}
SERIES_TOL = {"c2": 0.01, "c4": 0.05, "rho2_c2": 0.01, "limit_fOverRho": 0.005, "equilateral_limit": 0.005}
CONTROL_KEYS = ("rel_tol", "abs_tol", "max_step")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return "%.17g" % x


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows, meta=()) -> str:
    lines = [f"# {k} = {v}" for k, v in meta]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"


def _float_list(text, n=None, name="value"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{name}: expected {n} numbers, got {len(vals)}")
    return vals


def _tol_overrides(items, allowed):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--tol: expected KEY=VALUE, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        if k not in allowed:
            raise UsageError(f"--tol: unknown key {k!r}; allowed: {', '.join(allowed)}")
        try:
            out[k] = float(v)
        except ValueError:
            raise UsageError(f"--tol: {k} needs a number, got {v!r}") from None
        if not out[k] > 0:
            raise UsageError(f"--tol: {k} must be positive")
    return out


def _system(args) -> MassSystem:
    masses = _float_list(args.masses, name="--masses")
    try:
        return MassSystem(masses, args.a)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _out_path(args, default_name, override=None) -> Path:
    if override:
        p = Path(override)
        return p if p.is_absolute() else Path(args.out) / p
    return Path(args.out) / default_name


# --- scenario-driven commands ---------------------------------------------------


def _run_scenario(args):
    scen = Scenario.from_file(args.scenario)
    sys_, state, ctl, expected = scen.build(args.seed)
    from dataclasses import replace

    over = _tol_overrides(args.tol, CONTROL_KEYS)
    if over:
        ctl = replace(ctl, **over)
    traj = integrate(state, sys_, ctl)
    return scen, sys_, traj, expected


def cmd_simulate(args) -> int:
    scen, sys_, traj, expected = _run_scenario(args)
    d = traj.diagnostics()
    n = sys_.n
    header = ["t", "tau", "theta"]
    header += [f"q{k + 1}{c}" for k in range(n) for c in "xy"]
    header += [f"p{k + 1}{c}" for k in range(n) for c in "xy"]
    header += ["I", "dIdt", "U", "T", "H", "C", "mu", "B"]
    rows = []
    idx = list(range(0, len(traj), scen.stride))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    for i in idx:
        rows.append([traj.t[i], traj.tau[i], traj.theta[i], *traj.q[i].ravel(), *traj.p[i].ravel(),
                     d.I[i], d.dIdt[i], d.U[i], d.T[i], d.H[i], d.C[i], d.mu[i], d.B[i]])
    meta = [("preset", scen.preset), ("masses", " ".join(fmt(m) for m in sys_.masses)), ("a", fmt(sys_.a)),
            ("termination", traj.termination.value)]
    meta += [(f"expected.{k}", fmt(v)) for k, v in sorted(expected.items())]
    out = _out_path(args, Path(args.scenario).stem + ".csv", scen.path)
    atomic_write(out, _csv(header, rows, meta))
    print(out)
    return EXIT_OK


def cmd_audit(args) -> int:
    from .checks import audit

    scen, sys_, traj, _ = _run_scenario(args)
    report = audit(traj, sys_)
    out = _out_path(args, Path(args.scenario).stem + ".audit.json")
    atomic_write(out, _json(report.to_dict()))
    print(out)
    return EXIT_OK


# --- shape-space commands ---------------------------------------------------------


def _contour_rows(path, chart):
    for pid, x, y in path.rows():
        yield [str(pid), x, y, chart.mu(x, y)]


def cmd_critical_path(args) -> int:
    sys_ = _system(args)
    if sys_.n != 3:
        raise UsageError("--masses: critical paths need exactly 3 masses")
    chart = ShapeChart(sys_)
    window = Window(*_float_list(args.window, 4, "--window"))
    if args.level == "auto":
        cm = critical_measures(sys_)
        levels = []
        for k, mu in enumerate(cm.mu_c, start=1):
            if not any(abs(mu - other) <= 1e-12 * mu for _, other in levels):
                levels.append((k, mu))
        explicit = False
    else:
        try:
            levels = [(0, float(args.level))]
        except ValueError:
            raise UsageError(f"--level: expected 'auto' or a number, got {args.level!r}") from None
        explicit = True
    status = EXIT_OK
    for k, level in levels:
        name = f"critical_path_mu_c{k}.csv" if not explicit else "critical_path.csv"
        meta = [("level", fmt(level)), ("grid_n", str(args.grid_n)), ("window", args.window)]
        try:
            path = critical_path_contour(chart, level, window, args.grid_n)
        except EmptyContour as exc:
            if explicit:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_EMPTY
            print(f"warning: {exc}", file=sys.stderr)
            status = EXIT_EMPTY
            continue
        out = _out_path(args, name)
        atomic_write(out, _csv(["polyline_id", "x", "y", "mu"], _contour_rows(path, chart), meta))
        print(out)
    return status


def phi_profile_table(H, mu, a, B, I_lo, I_hi, n):
    """Samples of ``Phi`` on a geometric grid plus the root and shape summary."""
    I = np.geomspace(I_lo, I_hi, n)
    phi = phi_of_I(I, H, mu, a)
    prof = PhiProfile(H, mu, a, B)
    summary = {"stationary_point": prof.stationary_point()}
    d = dphi_dI(I, H, mu, a)
    summary["shape"] = "interior_minimum" if np.any(d[:-1] < 0) and np.any(d[1:] > 0) else (
        "monotone_decreasing" if np.all(d < 0) else "other")
    roots = []
    double = False
    if B is not None and B >= 0:
        try:
            tp = turning_points(prof)
            roots = [r for r in (tp.I_min, tp.I_max) if r is not None]
            double = tp.I_min is not None and tp.I_min == tp.I_max
            if double:
                roots = [tp.I_min]
        except SaariLabError:
            roots = []
    summary["roots"] = roots
    summary["double_root"] = double
    return I, phi, summary


def cmd_phi_profile(args) -> int:
    lo, hi = _float_list(args.I_range, 2, "--I-range")
    if not (0 < lo < hi):
        raise UsageError("--I-range: need 0 < lo < hi")
    if args.a == 2:
        raise UsageError("--a: Phi(I) is undefined for a = 2")
    I, phi, summary = phi_profile_table(args.H, args.mu, args.a, args.B, lo, hi, args.n)
    meta = [("H", fmt(args.H)), ("mu", fmt(args.mu)), ("a", fmt(args.a)), ("B", fmt(args.B)),
            ("shape", summary["shape"]), ("double_root", str(summary["double_root"]).lower())]
    if summary["stationary_point"] is not None:
        meta.append(("stationary_point", fmt(summary["stationary_point"])))
    meta += [(f"root{i + 1}", fmt(r)) for i, r in enumerate(summary["roots"])]
    target = -2.0 * args.B
    rows = [[Ii, ph, "0"] for Ii, ph in zip(I, phi)]
    # mark the sample nearest each root
    for r in summary["roots"]:
        if r > 0:
            j = int(np.argmin(np.abs(np.log(I) - math.log(r))))
            rows[j][2] = "1"
    out = _out_path(args, "phi_profile.csv")
    atomic_write(out, _csv(["I", "phi", "near_root"], rows, meta + [("minus_2B", fmt(target))]))
    print(out)
    return EXIT_OK


def series_check(max_x=0.05, grid_n=4096, tolerances=None) -> dict:
    """Fit the critical-path series for equal masses (``a = 1``) and compare with reference values."""
    tol = dict(SERIES_TOL, **(tolerances or {}))
    sys_ = MassSystem([1.0, 1.0, 1.0], 1.0)
    chart = ShapeChart(sys_)
    level = 5 / math.sqrt(2)
    span = max(max_x, 1e-6)
    window = Window(-span, span, -3.0 * span, 3.0 * span)
    path = critical_path_contour(chart, level, window, grid_n)
    fit = series_fit_critical_path(path, max_x)
    rfit = rho2_fit_critical_path(path, chart, max_x)
    ladder = [0.04 / 2**k for k in range(5)]
    table = series_limits_on_path(chart, level, ladder + [1e-3])
    lim, _ = richardson(table.x[:-1], table.f1_over_rho4_plus_f2_over_rho2[:-1], 2)
    eq = equilateral_limits(sys_, [k * math.pi / 4 for k in range(8)])
    eq_vals = [d.limit for d in eq]
    worst_eq = max(eq_vals, key=lambda v: abs(v - SERIES_REFERENCE["equilateral_limit"]))

    def entry(key, value, **extra):
        ref = SERIES_REFERENCE[key]
        rel = abs(value - ref) / abs(ref)
        return dict(fit=value, paper=ref, rel_err=rel, tol=tol[key], ok=bool(rel <= tol[key]), **extra)

    doc = {
        "c2": entry("c2", fit.c2, n_points=fit.n_points),
        "c4": entry("c4", fit.c4),
        "rho2_c2": entry("rho2_c2", rfit.c2),
        "limit_fOverRho": entry("limit_fOverRho", lim, at_x_1e_3=float(table.f1_over_rho4_plus_f2_over_rho2[-1])),
        "equilateral_limit": entry("equilateral_limit", worst_eq, per_angle=eq_vals),
        "settings": {"max_x": max_x, "grid_n": grid_n},
    }
    doc["ok"] = all(v["ok"] for k, v in doc.items() if k in SERIES_REFERENCE)
    return doc


def cmd_series_check(args) -> int:
    tol = _tol_overrides(args.tol, tuple(SERIES_TOL))
    if not args.max_x > 0:
        raise UsageError("--max-x must be positive")
    try:
        doc = series_check(args.max_x, args.grid_n, tol)
    except SaariLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREACH
    out = _out_path(args, "series_check.json")
    atomic_write(out, _json(doc))
    print(out)
    for key in SERIES_REFERENCE:
        e = doc[key]
        print(f"{key}: fit={e['fit']:.10g} reference={e['paper']:.10g} rel_err={e['rel_err']:.3e} "
              f"{'ok' if e['ok'] else 'BREACH'}")
    return EXIT_OK if doc["ok"] else EXIT_BREACH


def cmd_central_configs(args) -> int:
    sys_ = _system(args)
    if sys_.n != 3:
        raise UsageError("--masses: central configurations are computed for 3 masses")
    configs = list(equilateral_config(sys_)) + [euler_collinear(sys_, k) for k in (1, 2, 3)]
    cm = critical_measures(sys_)
    doc = {
        "masses": sys_.masses.tolist(),
        "a": sys_.a,
        "critical_measures": cm.as_dict(),
        "configurations": [
            {
                "kind": c.kind.value,
                "mu_c": c.mu_c,
                "rho_check": c.rho_check,
                "chart_point": list(c.chart_point),
                "ratio": None if math.isnan(c.ratio) else c.ratio,
                "shape": c.points.tolist(),
            }
            for c in configs
        ],
    }
    out = _out_path(args, "central_configs.json")
    atomic_write(out, _json(doc))
    print(out)
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomised perturbations")
    common.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override (repeatable)")

    p = _Parser(prog="saarilab", description="Planar three-body laboratory for constant-measure orbits.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="integrate a scenario and write a trajectory CSV")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("audit", parents=[common], help="integrate a scenario and write the audit JSON")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("critical-path", parents=[common], help="level sets of mu on the shape chart")
    s.add_argument("--masses", default="1,1,1")
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--level", default="auto", help="'auto' or a number")
    s.add_argument("--window", default="-4,4,-4,4", help="x0,x1,y0,y1")
    s.add_argument("--grid-n", type=int, default=512)
    s.set_defaults(func=cmd_critical_path)

    s = sub.add_parser("phi-profile", parents=[common], help="sample Phi(I) and its turning points")
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--B", type=float, default=0.0)
    s.add_argument("--I-range", default="1e-3,1e2", dest="I_range")
    s.add_argument("--n", type=int, default=400)
    s.set_defaults(func=cmd_phi_profile)

    s = sub.add_parser("series-check", parents=[common], help="critical-path series and limits against reference values")
    s.add_argument("--max-x", type=float, default=0.05, dest="max_x")
    s.add_argument("--grid-n", type=int, default=4096)
    s.set_defaults(func=cmd_series_check)

    s = sub.add_parser("central-configs", parents=[common], help="the five central configurations and critical measures")
    s.add_argument("--masses", default="1,1,1")
    s.add_argument("--a", type=float, default=1.0)
    s.set_defaults(func=cmd_central_configs)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "grid_n", 2) < 2 or getattr(args, "n", 2) < 2:
            raise UsageError("grid sizes must be at least 2")
        return args.func(args)
    except (ScenarioError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ToleranceFailure as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    raise SystemExit(main())
