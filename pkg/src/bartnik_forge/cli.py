"""Command-line entry point: bartnik-forge {validate,collar,extend,bound,reduce} --config run.json."""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .collar import build_collar, build_simple_collar, collar_constants
from .data import (AxisymmetricPath, BartnikData, DirectPath, RoundnessConstants, roundness_constants,
                   tilted_path, validate_data)
from .errors import AuditFailure, BartnikError, Infeasible, NumericalFailure
from .extension import assemble_cmc, assemble_extension, taper_profile
from .io import (SPEC_TAG, SWEEP_SCHEMA, ConfigError, dumps_json, load_config, plot_svg, validate_config,
                 write_csv, write_json, write_rows_csv)
from .mass import SWEEP_COLUMNS, bound_thm51, cor62_margins, mass_bounds, thm51_margin
from .profiles import (Condition, check_monotonicity, cmc_feasibility, find_constant_profile, g_prime,
                       profile_from_dict)
from .reduction import build_reduction

log = logging.getLogger("bartnik_forge")

COMMANDS = ("validate", "collar", "extend", "bound", "reduce")
EXIT_OK, EXIT_AUDIT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class Context:
    """Parsed run configuration plus the directory relative paths resolve against."""

    def __init__(self, cfg: dict, base_dir: Path):
        self.cfg = cfg
        self.base_dir = base_dir

    @property
    def data(self) -> BartnikData:
        d = self.cfg["data"]
        return BartnikData(float(d["r_o"]), float(d["H_o"]), float(d["P_o"]))

    def path(self):
        p = self.cfg.get("path")
        if p is None:
            raise ConfigError("this command needs a 'path' block")
        fe = float(p.get("freeze_eps", 0.1))
        if p["kind"] == "direct":
            return DirectPath(float(p["alpha"]), float(p["beta"]), fe)
        if p["kind"] == "tilted":
            return tilted_path(float(p["c"]), int(p.get("ns", 201)), int(p.get("ntheta", 201)), fe)
        f = Path(p["npz"])
        if not f.is_absolute():
            f = self.base_dir / f
        with np.load(f) as z:
            return AxisymmetricPath(z["s"], z["theta"], z["psi"], fe)

    def profile(self, key: str = "profile", spec: dict | None = None):
        spec = self.cfg.get(key) if spec is None else spec
        if spec is None:
            return None
        return profile_from_dict(spec, self.base_dir)


def _plot(out: Path, name: str, s, cols: dict, title: str):
    series = {k: cols[k] for k in ("f", "mu", "mH", "Hcal2") if k in cols}
    plot_svg(out / f"{name}.svg", s, series, title=title)


def _cond(c: Condition) -> dict:
    return c.as_dict()


def kor_any_conditions(d: BartnikData, rc: RoundnessConstants) -> dict[str, Condition]:
    """Hypotheses of the constant-profile existence result: both strict."""
    r, a, b = d.r_o, rc.alpha, rc.beta
    h2, P2 = d.hcal2, d.P_o**2
    rhs1 = math.inf if a == 0 else 4 * b / (a * r**2)
    rhs2 = math.inf if a == 0 else (4 * b - a * r**2 * h2) / (a * r**2)
    return {"hcal_roundness": Condition(h2 < rhs1, h2, rhs1), "momentum": Condition(P2 < rhs2, P2, rhs2)}


def _attempt(fn):
    try:
        return fn()
    except BartnikError as e:
        return {"passed": False, "error": e.payload()}


def validate_report(ctx: Context) -> dict:
    """Pass/fail with margins for each feasibility check; a check missing its inputs is reported as skipped."""
    d = validate_data(ctx.data)
    path = ctx.path()
    rc = roundness_constants(path)
    out = {"data": {"r_o": d.r_o, "H_o": d.H_o, "P_o": d.P_o, "hcal2": d.hcal2},
           "roundness": {"alpha": rc.alpha, "beta": rc.beta}}

    def thm46():
        x = ctx.profile()
        chosen = x is None
        if chosen:
            x = find_constant_profile(d, rc)
        c, xo = collar_constants(d, rc, x)
        m1 = 4 * c.feasC1 / d.r_o**2 - d.hcal2 if math.isfinite(c.feasC1) else math.inf
        m2 = c.feasC2 * c.x_ro**2 - d.P_o**2
        rr = np.linspace(d.r_o, 20 * d.r_o, 2001)
        dG = g_prime(xo, rr)
        g_ok = bool(np.all(dG >= -1e-10))
        return {"passed": bool(m1 > 0 and m2 > 0 and g_ok), "profile": xo.describe(), "profile_chosen": chosen,
                "margins": {"hcal_roundness": m1, "momentum": m2, "min_dG": float(dG.min())},
                "collar_length": c.A, "constants": c.as_dict()}

    out["thm46"] = _attempt(thm46)

    cmc = ctx.cfg.get("cmc")
    if cmc is None and (ctx.cfg.get("profile") or {}).get("kind") == "cmc":
        cmc = ctx.cfg["profile"]
    if cmc is None:
        out["cor47"] = {"skipped": True, "reason": "no CMC parameters given"}
    else:
        def cor47():
            conds = cmc_feasibility(d, float(cmc["K2"]), float(cmc["K1"]), rc)
            return {"passed": all(c.passed for c in conds.values()),
                    "conditions": {k: _cond(c) for k, c in conds.items()}}
        out["cor47"] = _attempt(cor47)

    conds = kor_any_conditions(d, rc)
    out["cor48"] = {"passed": all(c.passed for c in conds.values()),
                    "conditions": {k: _cond(c) for k, c in conds.items()}}

    def thm51():
        return {"passed": True, "margin": thm51_margin(d, rc), "bound": bound_thm51(d, rc)}
    out["thm51"] = _attempt(thm51)
    if not out["thm51"]["passed"]:
        out["thm51"]["margin"] = thm51_margin(d, rc)

    R = (ctx.cfg.get("bound") or {}).get("R_gamma")
    mg = cor62_margins(d, rc, R)
    out["cor62"] = {"passed": bool(mg["curvature"] > 0 and mg["roundness"] > 0), "margins": mg}
    evaluated = [v for v in out.values() if isinstance(v, dict) and "passed" in v]
    out["feasible"] = all(v["passed"] for v in evaluated)
    return out


def cmd_validate(ctx: Context, out: Path, plots: bool) -> int:
    rep = validate_report(ctx)
    write_json(out / "validate.json", rep)
    sys.stdout.write(dumps_json({k: rep[k].get("passed") for k in ("thm46", "cor47", "cor48", "thm51", "cor62")}))
    return EXIT_OK if rep["feasible"] else EXIT_AUDIT


def cmd_collar(ctx: Context, out: Path, plots: bool) -> int:
    d, path = ctx.data, ctx.path()
    opts = ctx.cfg.get("collar", {})
    n = int(opts.get("leaves", 401))
    if opts.get("type", "general") == "simple":
        slab = build_simple_collar(d, path, n=n)
    else:
        x = ctx.profile() or find_constant_profile(d, roundness_constants(path))
        slab = build_collar(d, path, x, n=n, round_length=opts.get("round_length"))
    cols = slab.csv_columns()
    write_csv(out / "collar.csv", cols)
    write_json(out / "collar.json", slab.report())
    if plots:
        _plot(out, "collar", slab.s, {"f": slab.u, "mu": slab.mu, "mH": slab.mH, "Hcal2": slab.hcal2}, "collar")
    return EXIT_OK


def cmd_extend(ctx: Context, out: Path, plots: bool) -> int:
    d, path = ctx.data, ctx.path()
    opts = ctx.cfg.get("extension", {})
    kw = {"eta": float(opts.get("eta", 0.01)), "n": int(opts.get("leaves", 401))}
    if "far_factor" in opts:
        kw["far_factor"] = float(opts["far_factor"])
    if "cmc" in opts:
        rep = assemble_cmc(d, path, float(opts["cmc"]["K2"]), float(opts["cmc"]["K1"]), **kw)
    else:
        x = ctx.profile() or find_constant_profile(d, roundness_constants(path))
        rep = assemble_extension(d, path, x, **kw)
    if "taper" in opts:
        tp = opts["taper"]
        rep = taper_profile(rep, float(tp["r_switch"]), ctx.profile(spec=tp["target"]))
    cols = rep.csv_columns()
    write_csv(out / "extension.csv", cols)
    write_json(out / "extension.json", rep.to_json())
    if plots:
        _plot(out, "extension", cols["s"], cols, "extension")
    return EXIT_OK


def _sweep_rows(d0: BartnikData, sweep: dict, R_gamma) -> list[dict]:
    rows = []
    for H, P, a, b in itertools.product(sweep["H_o"], sweep["P_o"], sweep["alpha"], sweep["beta"]):
        d = BartnikData(d0.r_o, float(H), float(P))
        try:
            validate_data(d)
            rep = mass_bounds(d, RoundnessConstants(float(a), float(b)), R_gamma, witness=False)
            rows.append(rep.row())
        except Infeasible:
            rows.append({"r_o": d.r_o, "H_o": d.H_o, "P_o": d.P_o, "alpha": float(a), "beta": float(b),
                         "mH0": 0.5 * d.r_o * (1 - d.r_o**2 * d.hcal2 / 4), "bound51": math.nan,
                         "bound62": math.nan, "feasible51": 0, "feasible62": 0})
    return rows


def cmd_bound(ctx: Context, out: Path, plots: bool) -> int:
    d = ctx.data
    opts = ctx.cfg.get("bound", {})
    R = opts.get("R_gamma")
    rc = roundness_constants(ctx.path())
    rep = mass_bounds(d, rc, R, witness=bool(opts.get("witness", True)))
    write_json(out / "bounds.json", rep.to_json())
    if "sweep" in opts:
        rows = _sweep_rows(d, opts["sweep"], R)
        write_rows_csv(out / "bounds_sweep.csv", rows, SWEEP_COLUMNS)
    feasible = rep.bound_thm51 is not None or rep.bound_cor62 is not None
    return EXIT_OK if feasible else EXIT_AUDIT


def cmd_reduce(ctx: Context, out: Path, plots: bool) -> int:
    d = ctx.data
    opts = ctx.cfg.get("reduction", {})
    path = ctx.path() if "path" in ctx.cfg else None
    if "Rmin" not in opts and not isinstance(path, AxisymmetricPath):
        raise ConfigError("reduce needs reduction.Rmin or an axisymmetric path")
    col = build_reduction(d, opts.get("Rmin"), float(opts.get("delta_max", 0.01)),
                          path if isinstance(path, AxisymmetricPath) else None, int(opts.get("nodes", 2001)))
    cols = col.csv_columns()
    write_csv(out / "reduction.csv", cols)
    write_json(out / "reduction.json", col.report())
    if plots:
        r = d.r_o * np.exp(col.eps * col.f)
        plot_svg(out / "reduction.svg", col.t,
                 {"f": col.f, "mu": cols["mu"], "mH": col.hawking(), "Hcal2": col.H**2 - col.P**2, "r": r},
                 xlabel="t", title="reduction collar")
    return EXIT_OK


HANDLERS = {"validate": cmd_validate, "collar": cmd_collar, "extend": cmd_extend, "bound": cmd_bound,
            "reduce": cmd_reduce}


def _error_doc(kind: str, message: str, extra: dict | None = None) -> dict:
    doc = {"error": kind, "message": message, "version": __version__, "spec": SPEC_TAG}
    if extra:
        doc["detail"] = extra
    return doc


def run_one(command: str, cfg: dict, base_dir: Path, out: Path, plots: bool) -> int:
    """Execute one validated config; write error.json and return the exit code on failure."""
    out.mkdir(parents=True, exist_ok=True)
    try:
        validate_config(cfg)
        cmd = cfg.get("command", command)
        if cmd != command:
            raise ConfigError(f"config is for '{cmd}', invoked as '{command}'")
        ctx = Context(cfg, base_dir)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            logging.captureWarnings(True)
            code = HANDLERS[command](ctx, out, plots)
        write_json(out / "run.json", {"command": command, "config": cfg, "exit_code": code,
                                      "spec": SPEC_TAG, "version": __version__})
        return code
    except ConfigError as e:
        doc, code = _error_doc("ConfigError", str(e)), EXIT_USAGE
    except AuditFailure as e:
        doc, code = _error_doc(e.code, str(e), e.payload()), EXIT_AUDIT
    except NumericalFailure as e:
        doc, code = _error_doc(e.code, str(e), e.payload()), EXIT_NUMERIC
    except (OSError, KeyError, ValueError) as e:
        doc, code = _error_doc(type(e).__name__, str(e)), EXIT_USAGE
    doc["exit_code"] = code
    write_json(out / "error.json", doc)
    sys.stderr.write(dumps_json(doc))
    return code


def _sweep_worker(args):
    command, cfg, base_dir, out, plots = args
    return run_one(command, cfg, Path(base_dir), Path(out), plots)


def run_sweep(command: str, sweep: dict, base_dir: Path, out: Path, plots: bool) -> int:
    """Independent runs in isolated subdirectories; the overall code is the worst one."""
    runs = sweep["runs"]
    names = [r.get("name", f"run{i:04d}") for i, r in enumerate(runs)]
    if len(set(names)) != len(names):
        raise ConfigError("sweep run names must be unique")
    jobs = [(command, {"spec": SPEC_TAG, **r}, str(base_dir), str(out / nm), plots) for r, nm in zip(runs, names)]
    workers = int(sweep.get("workers", 1))
    if workers == 1:
        codes = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            codes = list(ex.map(_sweep_worker, jobs))
    summary = {"runs": [{"name": nm, "exit_code": c} for nm, c in zip(names, codes)], "spec": SPEC_TAG}
    write_json(out / "sweep.json", summary)
    order = {EXIT_OK: 0, EXIT_AUDIT: 1, EXIT_NUMERIC: 2, EXIT_USAGE: 3}
    return max(codes, key=lambda c: order[c])


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(dumps_json(_error_doc("UsageError", message)))
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bartnik-forge", description="Collar, extension, mass-bound and reduction runs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run config (or sweep file with --sweep)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--plots", action="store_true", help="also write SVG line plots")
        sp.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
        sp.add_argument("--sweep", action="store_true", help="treat --config as a list of runs")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    cfg_path = Path(args.config)
    try:
        cfg = load_config(cfg_path, SWEEP_SCHEMA if args.sweep else {})
    except ConfigError as e:
        out.mkdir(parents=True, exist_ok=True)
        doc = _error_doc("ConfigError", str(e))
        doc["exit_code"] = EXIT_USAGE
        write_json(out / "error.json", doc)
        sys.stderr.write(dumps_json(doc))
        return EXIT_USAGE
    base = cfg_path.resolve().parent
    if args.sweep:
        try:
            return run_sweep(args.command, cfg, base, out, args.plots)
        except ConfigError as e:
            sys.stderr.write(dumps_json(_error_doc("ConfigError", str(e))))
            return EXIT_USAGE
    return run_one(args.command, cfg, base, out, args.plots)


if __name__ == "__main__":
    sys.exit(main())
