"""Command line: ``capmm <command> --config run.yaml [options]``.

Exit codes: 0 when every asserted invariant held, 1 on an invariant failure or
non-convergence, 2 on usage, configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, RunConfig, load_config, parse_config
from .distance import interface_length, signed_geodesic_distance
from .fieldio import FieldFormatError, config_hash, dump_field, dump_set, write_csv
from .scheme import NestingError, evolve, function_step, set_minimizer
from .solver import NonConvergence, solve_capillary_tv

log = logging.getLogger("capillary_mm")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DESCRIPTIONS = {
    "config_hash": "hash of the validated configuration and command options",
    "step": "time step index",
    "t": "time",
    "area": "area of the region (cell count times dx^2)",
    "interface_length": "length of the piecewise-linear interface",
    "angle_left": "contact angle at the left wall in degrees (blank if no contact)",
    "angle_right": "contact angle at the right wall in degrees (blank if no contact)",
    "hausdorff_dx": "symmetric Hausdorff distance of interface cells, in dx",
    "mean_height_err_dx": "mean interface height minus exact, in dx",
    "max_height_err_dx": "largest column height error, in dx",
    "iterations": "primal-dual iterations",
    "rel_gap": "relative duality gap",
    "ratio": "(S_h phi(z) - phi(z)) / h",
    "target": "-F(grad phi(z), hess phi(z))",
    "error": "|ratio - target|",
    "violations": "checks beyond the allowance",
    "worst_slack": "largest measured value minus allowance",
    "extinction_time": "first time the region is empty",
}


def _solver_row(rep) -> dict:
    return {k: v for k, v in rep.as_row().items() if k not in ("tol",)}


class Run:
    def __init__(self, cfg: RunConfig, command: str, extra: dict):
        self.cfg = cfg
        self.domain = cfg.build_domain()
        self.out = Path(cfg.output.dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.hash = config_hash({"command": command, "config": cfg.as_dict(), **extra})
        self.solver = cfg.solver_config()

    def csv(self, rows, name):
        p = write_csv(rows, self.out / name, self.hash, DESCRIPTIONS)
        log.info("wrote %s", p)
        return p

    def initial(self):
        return self.cfg.initial.level_function(self.domain, self.cfg.side_beta())


def cmd_distance(run: Run, args) -> int:
    if not run.cfg.initial.is_set:
        raise ConfigError([("initial.kind", "distance needs a set initial condition")])
    region = run.cfg.initial.region(run.domain, run.cfg.side_beta())
    d = signed_geodesic_distance(run.domain, region)
    dump_field(d, run.out / "distance.field", run.domain)
    run.csv([{"min": float(d[run.domain.mask].min()), "max": float(d[run.domain.mask].max())}],
            "distance.csv")
    return EXIT_OK


def cmd_solve(run: Run, args) -> int:
    cfg = run.cfg
    if cfg.initial.is_set:
        g = signed_geodesic_distance(run.domain, cfg.initial.region(run.domain, cfg.side_beta()))
    else:
        g = run.initial()
    w, z, rep = solve_capillary_tv(run.domain, g, cfg.h, run.solver)
    dump_field(w, run.out / "w.field", run.domain)
    run.csv([_solver_row(rep)], "solve.csv")
    return EXIT_OK if rep.converged else EXIT_FAIL


def cmd_step(run: Run, args) -> int:
    cfg = run.cfg
    if cfg.initial.is_set:
        sm = set_minimizer(run.domain, cfg.initial.region(run.domain, cfg.side_beta()), cfg.h, run.solver)
        dump_set(sm.region(run.domain), run.out / "step.set", run.domain)
        dump_field(sm.w, run.out / "step_w.field", run.domain)
        run.csv([_solver_row(sm.report)], "step.csv")
        return EXIT_OK
    s, stack = function_step(run.domain, run.initial(), cfg.h, run.solver, dlam=cfg.dlam,
                             n_levels=cfg.n_levels, interpolate=args.interpolate)
    dump_field(s, run.out / "step.field", run.domain)
    rows = [{"level": float(lam), "solved": bool(sv)} for lam, sv in zip(stack.levels, stack.solved)]
    run.csv(rows, "step_levels.csv")
    return EXIT_OK


def _angles(domain, phi) -> dict:
    out = {}
    for wall in ("left", "right"):
        try:
            out[f"angle_{wall}"] = ex.contact_angle_measure(domain, phi, wall)
        except (ex.NoContact, ValueError):
            out[f"angle_{wall}"] = None
    return out


def cmd_evolve(run: Run, args) -> int:
    cfg, dom = run.cfg, run.domain
    n = cfg.n_steps
    if cfg.initial.is_set:
        region = cfg.initial.region(dom, cfg.side_beta())
        rows = []
        z = None
        status = EXIT_OK
        ext = None
        for k in range(n + 1):
            if k > 0:
                try:
                    sm = set_minimizer(dom, region, cfg.h, run.solver, z0=z)
                except NonConvergence as exc:
                    log.error("step %d: %s", k, exc)
                    status = EXIT_FAIL
                    break
                z, region = sm.z, sm.region(dom)
            phi = region.levels
            row = {"step": k, "t": k * cfg.h, "area": float(region.membership[dom.mask].sum()) * dom.dx**2,
                   "interface_length": interface_length(dom, phi)}
            if dom.shape == "strip":
                row.update(_angles(dom, phi))
            rows.append(row)
            if k % cfg.output.snapshot_every == 0 or k == n:
                dump_set(region, run.out / f"set_{k:05d}.set", dom)
            if k > 0 and region.is_empty(dom):
                ext = k * cfg.h
                break
        run.csv(rows, "interface.csv")
        run.csv([{"extinction_time": ext if ext is not None else math.nan}], "extinction.csv")
        return status
    ev = evolve(dom, run.initial(), cfg.h, n * cfg.h, run.solver, dlam=cfg.dlam,
                n_levels=cfg.n_levels, snapshot_every=cfg.output.snapshot_every)
    for t, u in zip(ev.times, ev.snapshots):
        dump_field(u, run.out / f"u_{int(round(t / cfg.h)):05d}.field", dom)
    run.csv([{"t": t, "min": float(u[dom.mask].min()), "max": float(u[dom.mask].max())}
             for t, u in zip(ev.times, ev.snapshots)], "evolve.csv")
    return EXIT_OK if ev.failed_at is None else EXIT_FAIL


def cmd_soliton(run: Run, args) -> int:
    cfg = run.cfg
    b = cfg.initial.b if cfg.initial.b is not None else cfg.side_beta()
    if b is None:
        raise ConfigError([("initial.b", "soliton test needs a contact value")])
    res = ex.soliton_invariance_test(run.domain, b, cfg.h, cfg.n_steps, run.solver)
    run.csv(res.rows(), "soliton.csv")
    ok = res.max_hausdorff_dx <= args.max_hausdorff and abs(res.final_drift_dx) <= args.max_drift
    return EXIT_OK if ok else EXIT_FAIL


def cmd_consistency(run: Run, args) -> int:
    fields = {"radial": ex.radial_field(tuple(args.center)), "linear": ex.linear_field(),
              "saddle": ex.saddle_field()}
    res = ex.consistency_probe(fields[args.field], tuple(args.z), args.h_list, run.solver,
                               half_width=args.half_width, beta=run.cfg.beta,
                               center=tuple(args.center) if args.field == "radial" else None)
    run.csv(res.rows(), "consistency.csv")
    return EXIT_OK if res.strictly_decreasing else EXIT_FAIL


def cmd_suite(run: Run, args) -> int:
    res = ex.contraction_suite(run.domain, args.trials, run.solver, h=run.cfg.h, seed=run.cfg.seed)
    rows = res.rows()
    run.csv(rows, "suite.csv")
    return EXIT_OK if all(r["violations"] == 0 for r in rows) else EXIT_FAIL


COMMANDS = {
    "distance": cmd_distance, "solve": cmd_solve, "step": cmd_step, "evolve": cmd_evolve,
    "soliton-test": cmd_soliton, "consistency": cmd_consistency, "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capmm", description="Capillary minimizing-movement scheme")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML run configuration (defaults are used when omitted)")
        s.add_argument("--out", help="output directory (overrides output.dir)")
        s.add_argument("--h", type=float, help="time step (overrides h)")
        s.add_argument("--steps", type=int, help="number of steps (overrides steps and clears T)")
        if name == "step":
            s.add_argument("--interpolate", action="store_true", help="sub-lattice values for S_h")
        if name == "soliton-test":
            s.add_argument("--max-hausdorff", type=float, default=3.0, help="allowed error in dx")
            s.add_argument("--max-drift", type=float, default=2.0, help="allowed mean drift in dx")
        if name == "consistency":
            s.add_argument("--field", choices=("radial", "linear", "saddle"), default="radial")
            s.add_argument("--z", type=float, nargs=2, default=(0.5 * math.cos(0.3), 0.5 * math.sin(0.3)))
            s.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0))
            s.add_argument("--h-list", type=float, nargs="+", default=(0.02, 0.01, 0.005))
            s.add_argument("--half-width", type=float, default=0.8)
        if name == "suite":
            s.add_argument("--trials", type=int, default=100)
    return p


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config({})
    over = cfg.as_dict()
    if args.out:
        over["output"]["dir"] = args.out
    if args.h is not None:
        over["h"] = args.h
    if args.steps is not None:
        over["steps"], over["T"] = args.steps, None
    return parse_config(over)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        extra = {k: v for k, v in vars(args).items() if k not in ("config", "verbose", "command")}
        run = Run(cfg, args.command, json.loads(json.dumps(extra, default=list)))
        return COMMANDS[args.command](run, args)
    except ConfigError as exc:
        for path, msg in exc.errors:
            print(f"config error: {path}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (FieldFormatError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergence, NestingError, ex.InterfaceAtCap, ex.NoContact) as exc:
        print(f"invariant failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
