"""Command-line front end: run, check, convergence, presets.

Exit codes: 0 success, 1 configuration or I/O error, 2 a check failed,
3 a run terminated on a non-finite state or a degenerate grid.
Command-line overrides take precedence over values in --config.
"""
import argparse
import json
import os
import sys
import time

from curveflow.config import config_from_dict
from curveflow.errors import ConfigError, IoError
from curveflow.flow import FlowVariant, Termination, evolve
from curveflow.monitor import CHECKS, convergence_study, slack_checks
from curveflow.presets import PRESETS, make_preset, resolve_params

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_RUN = 0, 1, 2, 3
ENV_OUT = "CURVEFLOW_OUT"
CHECK_ORDER = ["qlemma", "nablaw", "fxx", "lemform_a", "lemform_c", "lemform_e", "fx_pde", "phi_pde", "dissipation"]


def build_parser():
    p = argparse.ArgumentParser(
        prog="curveflow",
        description="Simulate and verify elastic flows of closed curves.",
    )
    sub = p.add_subparsers(dest="command", metavar="COMMAND", required=True)

    r = sub.add_parser("run", help="evolve a curve and write snapshots and diagnostics")
    r.add_argument("--config", metavar="PATH", help="JSON run configuration")
    r.add_argument("--preset", help="initial curve (when no config, or to override it)")
    r.add_argument("--lambda", dest="lam", type=float, metavar="L", help="energy weight lambda > 0")
    r.add_argument("--nodes", type=int, metavar="N", help="number of grid nodes (even, >= 8)")
    r.add_argument("--t-end", type=float, metavar="T", help="time horizon")
    r.add_argument("--flow", choices=[v.value for v in FlowVariant], help="flow variant")
    r.add_argument("--dt", type=float, help="fixed time step (switches to fixed stepping)")
    r.add_argument("--cfl", type=float, help="adaptive CFL factor in (0, 1] (switches to adaptive stepping)")
    r.add_argument("--out", metavar="DIR", help=f"output directory (default: ${ENV_OUT} or .)")
    r.add_argument("--svg-every", type=int, metavar="K", help="write an SVG frame every K snapshots (0: none)")
    r.add_argument("--seed", type=int, metavar="S", help="seed for randomized presets")

    c = sub.add_parser("check", help="run residual checks on refinements N/2, N, 2N")
    c.add_argument("name", choices=CHECK_ORDER + ["all"], help="check name or 'all'")
    c.add_argument("--preset", default="ellipse", help="initial curve (default: ellipse)")
    c.add_argument("--nodes", type=int, default=128, metavar="N", help="middle grid size (default: 128)")
    c.add_argument("--lambda", dest="lam", type=float, default=0.5, metavar="L", help="energy weight (default: 0.5)")
    c.add_argument("--flow", choices=[v.value for v in FlowVariant], default="d-lambda", help="flow variant")

    v = sub.add_parser("convergence", help="observed convergence order of one check")
    v.add_argument("name", choices=CHECK_ORDER, help="check name")
    v.add_argument("--preset", default="ellipse", help="initial curve (default: ellipse)")
    v.add_argument("--grids", type=int, nargs="+", default=[64, 128, 256], metavar="N",
                   help="strictly increasing grid sizes, at least 3 (default: 64 128 256)")
    v.add_argument("--lambda", dest="lam", type=float, default=0.5, metavar="L", help="energy weight (default: 0.5)")
    v.add_argument("--flow", choices=[v.value for v in FlowVariant], default="d-lambda", help="flow variant")

    s = sub.add_parser("presets", help="list initial curves or describe one")
    s.add_argument("name", nargs="?", help="preset to describe")
    return p


def _run_dict(args):
    if args.config:
        try:
            with open(args.config) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise IoError(args.config, exc.strerror or str(exc)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"{args.config}: invalid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("", f"{args.config}: top level must be an object")
    else:
        obj = {"preset": args.preset or "warped_circle", "lambda": 0.5, "N": 128, "T_end": 1.0}
    if args.preset is not None:
        if args.preset != obj.get("preset"):
            obj.pop("preset_params", None)
        obj["preset"] = args.preset
    for key, val in (("lambda", args.lam), ("N", args.nodes), ("T_end", args.t_end),
                     ("variant", args.flow), ("seed", args.seed)):
        if val is not None:
            obj[key] = val
    step = dict(obj.get("step") or {})
    if args.dt is not None:
        step.update(mode="fixed", dt=args.dt)
    if args.cfl is not None:
        step.update(mode="adaptive", cfl=args.cfl, dt=None)
    if step:
        obj["step"] = step
    if args.svg_every is not None:
        obj["output"] = dict(obj.get("output") or {}, svg_every=args.svg_every)
    return obj


def cmd_run(args):
    from curveflow.io import RunWriter

    cfg = config_from_dict(_run_dict(args))
    out_dir = args.out or os.environ.get(ENV_OUT) or "."
    t0 = time.perf_counter()
    with RunWriter(cfg.output, out_dir) as w:
        traj = evolve(cfg, on_snapshot=w.snapshot, on_record=w.record)
    last = traj.diagnostics[-1]
    energy = last.D_lambda if cfg.variant is FlowVariant.DLAMBDA else last.E_lambda
    label = "D_lambda" if cfg.variant is FlowVariant.DLAMBDA else "E_lambda"
    s = traj.summary
    print(
        f"termination={traj.termination.value} t={s.t_final:.6g} steps={s.steps} "
        f"{label}={energy:.9g} mesh_ratio={last.mesh_ratio:.6g} min_fx={s.inf_min_fx:.6g} "
        f"wall={time.perf_counter() - t0:.1f}s"
    )
    print(f"snapshots: {w.snapshot_path}\ndiagnostics: {w.diagnostics_path}")
    if traj.termination is not Termination.REACHED_HORIZON:
        print(f"error: {traj.message}", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


def _report_table(reports):
    ok = True
    for rep in reports:
        ok &= rep.passed
        print(f"{'PASS' if rep.passed else 'FAIL'}  {rep.describe()}")
    return ok


def cmd_check(args):
    N = args.nodes
    if N < 16 or N % 4:
        raise ConfigError("nodes", f"check needs N divisible by 4 and >= 16 (grids N/2, N, 2N), got {N}")
    if not args.lam > 0:
        raise ConfigError("lambda", f"lambda must be positive, got {args.lam}")
    resolve_params(args.preset)
    grids = [N // 2, N, 2 * N]
    names = CHECK_ORDER if args.name == "all" else [args.name]
    reports = [convergence_study(name, args.preset, grids, lam=args.lam, variant=args.flow) for name in names]
    ok = _report_table(reports)
    if args.name == "all":
        for sc in slack_checks(make_preset(args.preset, N=N), args.lam):
            ok &= sc.passed
            print(f"{'PASS' if sc.passed else 'FAIL'}  slack {sc.name:<12} value={sc.value:.3e} (>= -{sc.tol:.1e})")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_convergence(args):
    if not args.lam > 0:
        raise ConfigError("lambda", f"lambda must be positive, got {args.lam}")
    resolve_params(args.preset)
    rep = convergence_study(args.name, args.preset, args.grids, lam=args.lam, variant=args.flow)
    return EXIT_OK if _report_table([rep]) else EXIT_CHECK


def cmd_presets(args):
    if args.name:
        if args.name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {args.name!r}; choose from {sorted(PRESETS)}")
        p = PRESETS[args.name]
        print(f"{p.name}: {p.description}")
        for key, val in resolve_params(p.name).items():
            print(f"  {key} = {val}")
        return EXIT_OK
    for p in PRESETS.values():
        print(f"{p.name:<18} {p.description}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "check": cmd_check, "convergence": cmd_convergence, "presets": cmd_presets}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, IoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
