"""Command-line interface: ``fermichart <command> [model flags] [grid flags]``.

Grids are given as ``--tau V`` for a single value or ``--tau LO HI N`` for N
evenly spaced values.  Output is CSV (header row first, floats with 17
significant digits) or JSON.  Points that fall outside the chart are emitted
as rows with a ``status`` other than ``ok``.

Exit codes: 0 success, 1 a verification check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import chart as ch
from .chart import ChartContext, CurvaturePoint, FermiPoint
from .errors import BeyondHorizonError, FermiChartError, OutOfChartError
from .kinematics import classify_speeds
from .metric import line_element
from .numerics import DEFAULT_TOL, Tolerances
from .scalefactor import hubble, model_from_spec
from .verification import VerifyConfig, power_law_radius_ratio, run_checks

COMMANDS = ("chart", "metric", "radius", "horizon", "velocity", "verify", "figure1")
FIGURE1_ALPHAS = (0.5, 1.0, 2.0)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    model_spec: dict
    k: int = 0
    fmt: str = "csv"
    output: str | None = None
    tol: Tolerances = DEFAULT_TOL
    jobs: int = 1
    grids: dict = field(default_factory=dict)
    direction: str = "to-fermi"
    theta: float = 0.0
    phi: float = 0.0


# --------------------------------------------------------------------------
# Parsing


def _grid(values: Sequence[float] | None, name: str, default=None) -> list[float]:
    if values is None:
        if default is None:
            raise UsageError(f"--{name} is required")
        values = default
    if len(values) == 1:
        return [float(values[0])]
    if len(values) == 3:
        lo, hi, n = values
        if n != int(n) or n < 1:
            raise UsageError(f"--{name}: count must be a positive integer, got {n!r}")
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise UsageError(f"--{name}: range must be finite")
        return [float(v) for v in np.linspace(lo, hi, int(n))]
    raise UsageError(f"--{name} takes V or LO HI N")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fermichart",
                                description="Fermi coordinates for comoving observers in RW cosmologies.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--model", default="milne",
                   choices=["power_law", "milne", "lambda_fluid", "sinh", "log"])
    g.add_argument("--model-file", help="JSON model description (overrides --model)")
    g.add_argument("--alpha", type=float, default=0.5)
    g.add_argument("--lambda", dest="lam", type=float, default=3.0)
    g.add_argument("--gamma", type=float, default=1.0)
    g.add_argument("--A", dest="big_a", type=float, default=1.0)
    g.add_argument("--k", type=int, default=0, choices=[0, -1])
    o = common.add_argument_group("output")
    o.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    o.add_argument("--output", "-o")
    o.add_argument("--jobs", type=int, default=1, help="threads for grid sweeps")
    t = common.add_argument_group("tolerances")
    t.add_argument("--quad-rel", type=float)
    t.add_argument("--quad-abs", type=float)
    t.add_argument("--root-rel", type=float)

    def grid_arg(sp, name, help_):
        sp.add_argument(f"--{name}", nargs="+", type=float, metavar="V", help=help_)

    c = sub.add_parser("chart", parents=[common], help="map points between the two coordinate systems")
    c.add_argument("--direction", choices=["to-fermi", "from-fermi"], default="to-fermi")
    for name in ("t", "chi", "tau", "rho"):
        grid_arg(c, name, f"{name} grid")
    grid_arg(c, "rho-frac", "rho as a fraction of the spaceslice radius")
    c.add_argument("--theta", type=float, default=0.0, help="passed through unchanged")
    c.add_argument("--phi", type=float, default=0.0, help="passed through unchanged")

    m = sub.add_parser("metric", parents=[common], help="metric coefficients on a (tau, rho) grid")
    grid_arg(m, "tau", "tau grid")
    grid_arg(m, "rho", "rho grid")
    grid_arg(m, "rho-frac", "rho as a fraction of the spaceslice radius")

    r = sub.add_parser("radius", parents=[common], help="spaceslice radius with its Hubble bounds")
    grid_arg(r, "tau", "tau grid")

    h = sub.add_parser("horizon", parents=[common], help="event horizon chi_horiz(t0)")
    grid_arg(h, "t0", "t0 grid")

    v = sub.add_parser("velocity", parents=[common], help="relative speeds of comoving particles")
    grid_arg(v, "tau", "tau grid")
    grid_arg(v, "t0", "t0 grid")
    grid_arg(v, "t0-frac", "t0 as a fraction of tau")

    sub.add_parser("verify", parents=[common], help="run the invariant checks for one model")

    f = sub.add_parser("figure1", parents=[common], help="spaceslice diameter against tau for three power laws")
    grid_arg(f, "tau", "tau grid (default 0.1 10 100)")
    return p


def _model_spec(ns) -> dict:
    if ns.model_file:
        try:
            with open(ns.model_file, encoding="utf-8") as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read model file: {exc}") from exc
    if ns.model == "power_law":
        return {"kind": "power_law", "alpha": ns.alpha}
    if ns.model == "lambda_fluid":
        return {"kind": "lambda_fluid", "lambda": ns.lam, "gamma": ns.gamma, "A": ns.big_a}
    return {"kind": ns.model}


def config_from_args(argv: Sequence[str] | None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    tol_kw = {k: getattr(ns, k) for k in ("quad_rel", "quad_abs", "root_rel") if getattr(ns, k) is not None}
    try:
        tol = DEFAULT_TOL.tightened(**tol_kw)
    except FermiChartError as exc:
        raise UsageError(str(exc)) from exc
    if ns.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    grids = {}
    for key in ("t", "chi", "tau", "rho", "rho_frac", "t0", "t0_frac"):
        if getattr(ns, key, None) is not None:
            grids[key] = _grid(getattr(ns, key), key.replace("_", "-"))
    return RunConfig(ns.command, _model_spec(ns), ns.k, ns.fmt, ns.output, tol, ns.jobs, grids,
                     getattr(ns, "direction", "to-fermi"), getattr(ns, "theta", 0.0), getattr(ns, "phi", 0.0))


# --------------------------------------------------------------------------
# Commands


def _status(exc: Exception) -> str:
    if isinstance(exc, BeyondHorizonError):
        return "beyond_horizon"
    if isinstance(exc, OutOfChartError):
        return "out_of_chart"
    return "error"


def _guard(fn: Callable[[], dict], base: dict, columns: Sequence[str]) -> dict:
    try:
        row = fn()
        row.setdefault("status", "ok")
        row.setdefault("message", "")
    except FermiChartError as exc:
        row = dict(base, status=_status(exc), message=str(exc))
    return {c: row.get(c, math.nan) for c in columns}


def _sweep(cfg: RunConfig, items: Iterable, fn: Callable) -> list:
    items = list(items)
    if cfg.jobs == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(fn, items))


def _chart_rows(ctx, cfg):
    pass_cols = ["theta", "phi"]
    if cfg.direction == "to-fermi":
        cols = ["t", "chi", "tau", "rho", "error", *pass_cols, "status", "message"]
        pts = [(t, c) for t in _need(cfg, "t") for c in _need(cfg, "chi")]

        def one(pt):
            t, chi = pt
            base = {"t": t, "chi": chi, "theta": cfg.theta, "phi": cfg.phi}

            def go():
                fp = ch.to_fermi(ctx, CurvaturePoint(t, chi, cfg.theta, cfg.phi))
                return dict(base, tau=fp.tau, rho=fp.rho, error=fp.error)
            return _guard(go, base, cols)
        return cols, _sweep(cfg, pts, one)

    cols = ["tau", "rho", "t", "chi", "error", *pass_cols, "status", "message"]

    def one(pt):
        tau, rho, frac = pt
        base = {"tau": tau, "rho": rho, "theta": cfg.theta, "phi": cfg.phi}

        def go():
            r = rho if frac is None else frac * ch.max_radius(ctx, tau)
            q = ch.from_fermi(ctx, FermiPoint(tau, r, cfg.theta, cfg.phi))
            return dict(base, rho=r, t=q.t, chi=q.chi, error=q.error)
        return _guard(go, base, cols)
    return cols, _sweep(cfg, _tau_rho_points(cfg), one)


def _need(cfg, key):
    if key not in cfg.grids:
        raise UsageError(f"--{key.replace('_', '-')} is required for '{cfg.command}'")
    return cfg.grids[key]


def _tau_rho_points(cfg):
    taus = _need(cfg, "tau")
    if "rho" in cfg.grids:
        return [(t, r, None) for t in taus for r in cfg.grids["rho"]]
    if "rho_frac" in cfg.grids:
        return [(t, math.nan, f) for t in taus for f in cfg.grids["rho_frac"]]
    raise UsageError("--rho or --rho-frac is required")


def _metric_rows(ctx, cfg):
    cols = ["tau", "rho", "t0", "chi", "g_tautau", "lambda_k", "angular_coeff", "form_spread",
            "consistent", "quad_error", "status", "message"]

    def one(pt):
        tau, rho, frac = pt
        base = {"tau": tau, "rho": rho}

        def go():
            r = rho if frac is None else frac * ch.max_radius(ctx, tau)
            s = line_element(ctx, FermiPoint(tau, r))
            return {"tau": s.tau, "rho": s.rho, "t0": s.t0, "chi": s.chi, "g_tautau": s.g_tautau,
                    "lambda_k": s.lambda_k, "angular_coeff": s.angular_coeff,
                    "form_spread": s.form_spread, "consistent": s.consistent, "quad_error": s.quad_error}
        return _guard(go, base, cols)
    return cols, _sweep(cfg, _tau_rho_points(cfg), one)


def _radius_rows(ctx, cfg):
    cols = ["tau", "rho_max", "half_pi_over_h", "inv_h", "status", "message"]

    def one(tau):
        def go():
            h = hubble(ctx.model, tau)
            return {"tau": tau, "rho_max": ch.max_radius(ctx, tau), "half_pi_over_h": 0.5 * math.pi / h,
                    "inv_h": 1.0 / h}
        return _guard(go, {"tau": tau}, cols)
    return cols, _sweep(cfg, _need(cfg, "tau"), one)


def _horizon_rows(ctx, cfg):
    cols = ["t0", "chi_horiz", "status", "message"]

    def one(t0):
        def go():
            v = ch.chi_horizon(ctx, t0)
            return {"t0": t0, "chi_horiz": v if math.isfinite(v) else "infinite"}
        return _guard(go, {"t0": t0}, cols)
    return cols, _sweep(cfg, _need(cfg, "t0"), one)


def _velocity_rows(ctx, cfg):
    cols = ["tau", "t0", "rho", "v_kin", "v_fermi", "hubble_term", "correction", "light_bound",
            "regime", "identity_residual", "metric_residual", "hubble_ok", "ordering", "ordering_ok",
            "status", "message"]
    taus = _need(cfg, "tau")
    if "t0" in cfg.grids:
        pts = [(tau, t0) for tau in taus for t0 in cfg.grids["t0"]]
    elif "t0_frac" in cfg.grids:
        pts = [(tau, f * tau) for tau in taus for f in cfg.grids["t0_frac"]]
    else:
        raise UsageError("--t0 or --t0-frac is required")

    def one(pt):
        tau, t0 = pt

        def go():
            s = classify_speeds(ctx, tau, t0)
            return {"tau": s.tau, "t0": s.t0, "rho": s.rho, "v_kin": s.v_kin, "v_fermi": s.v_fermi,
                    "hubble_term": s.hubble_term, "correction": s.correction,
                    "light_bound": s.light_bound, "regime": s.regime.value,
                    "identity_residual": s.identity_residual, "metric_residual": s.metric_residual,
                    "hubble_ok": s.hubble_ok, "ordering": s.ordering, "ordering_ok": s.ordering_ok}
        return _guard(go, {"tau": tau, "t0": t0}, cols)
    return cols, _sweep(cfg, pts, one)


def figure1_rows(taus: Sequence[float], tol: Tolerances = DEFAULT_TOL, jobs: int = 1):
    """Rows (alpha, tau, diameter, slope, expected_slope) for the three power laws."""
    cols = ["alpha", "tau", "diameter", "slope", "expected_slope"]
    rows = []
    for alpha in FIGURE1_ALPHAS:
        ctx = ChartContext(model_from_spec({"kind": "power_law", "alpha": alpha}), 0, tol)
        expected = 2.0 * power_law_radius_ratio(alpha)
        cfg = RunConfig("figure1", {}, jobs=jobs)
        diam = _sweep(cfg, taus, lambda tau: 2.0 * ch.max_radius(ctx, tau))
        rows += [{"alpha": alpha, "tau": tau, "diameter": d, "slope": d / tau, "expected_slope": expected}
                 for tau, d in zip(taus, diam)]
    return cols, rows


def _verify_rows(ctx, cfg):
    cols = ["check", "passed", "worst_margin", "applicable", "test_id", "detail"]
    rows = [{"check": r.name, "passed": r.passed, "worst_margin": r.worst_margin,
             "applicable": r.applicable, "test_id": r.test_id, "detail": r.detail}
            for r in run_checks(ctx, VerifyConfig())]
    return cols, rows


_COMMANDS = {
    "chart": _chart_rows,
    "metric": _metric_rows,
    "radius": _radius_rows,
    "horizon": _horizon_rows,
    "velocity": _velocity_rows,
    "verify": _verify_rows,
}


# --------------------------------------------------------------------------
# Output


def _cell(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def format_csv(cols: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def format_json(cfg: RunConfig, cols, rows) -> str:
    doc = {"command": cfg.command, "model": cfg.model_spec, "k": cfg.k, "columns": list(cols),
           "records": [{c: _json_value(r.get(c)) for c in cols} for r in rows]}
    return json.dumps(doc, indent=2) + "\n"


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute a configuration; returns (exit status, rendered output)."""
    if cfg.command == "figure1":
        taus = cfg.grids.get("tau") or _grid(None, "tau", default=[0.1, 10.0, 100])
        if any(not t > 0 for t in taus):
            raise UsageError("figure1 needs positive tau values")
        cols, rows = figure1_rows(taus, cfg.tol, cfg.jobs)
        status = 0
    else:
        try:
            model = model_from_spec(cfg.model_spec)
            ctx = ChartContext(model, cfg.k, cfg.tol)
        except (FermiChartError, ValueError, TypeError, KeyError) as exc:
            raise UsageError(f"invalid model: {exc}") from exc
        cols, rows = _COMMANDS[cfg.command](ctx, cfg)
        status = 0
        if cfg.command == "verify" and not all(r["passed"] for r in rows):
            status = 1
    text = format_json(cfg, cols, rows) if cfg.fmt == "json" else format_csv(cols, rows)
    return status, text


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
        status, text = run(cfg)
    except UsageError as exc:
        print(f"fermichart: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse
        return int(exc.code) if isinstance(exc.code, int) else 2
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.command == "verify":
        print("verify: " + ("all checks passed" if status == 0 else "FAILED"), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
