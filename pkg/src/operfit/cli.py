"""Command-line interface.

Subcommands: simulate, fit, scan, sweep, forcing, validate, report.
Stdout carries machine-parsable key=value lines; diagnostics go to
stderr. Exit codes are a stable contract: 0 success, 1 validation
failure, 2 usage or input errors, 3 simulation divergence,
4 non-convergence.
"""

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from . import report as report_mod
from .identify import (MODEL_KINDS, SimplexConfig, fit, model_from_params,
                       read_fit_report, read_table_csv, rmse_cost,
                       scan_alpha_delay_kp, sweep_delay, write_fit_report,
                       write_scan_grid, write_sweep_results)
from .loop import ForcingSpec, LoopConfig, UnstableLoopError, \
    generate_forcing, simulate
from .models import PLANT_PRESETS, PlantModel
from .sessions import (Session, SessionFileError, SessionInvariantError,
                       SessionMeta, read_session, write_session)
from .signals import resample

_EXIT_OK = 0
_EXIT_INVALID = 1
_EXIT_USAGE = 2
_EXIT_DIVERGED = 3
_EXIT_NO_CONVERGENCE = 4

# Options whose value may begin with "-" (negative numbers, ranges like
# -0.95:0.05:-0.05). argparse would read such a value as a flag, so the
# pre-pass below glues them to their option with "=".
_VALUE_MAY_BE_NEGATIVE = {
    "--alpha", "--delay", "--L", "--kp", "--tl", "--ti", "--tn", "--zero",
    "--fix-L", "--fix-delay", "--plant-gain", "--plant-tau",
    "--identity-tol",
}

# CLI mode spellings against the library's fit-mode names.
_MODE_BY_FLAG = {"closed": "closed_loop", "open": "open_loop"}


def _merge_negative_values(argv: list[str]) -> list[str]:
    out = []
    skip = False
    for pos, token in enumerate(argv):
        if skip:
            skip = False
            continue
        nxt = argv[pos + 1] if pos + 1 < len(argv) else None
        if token in _VALUE_MAY_BE_NEGATIVE and nxt is not None \
                and nxt.startswith("-") and len(nxt) > 1 \
                and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{token}={nxt}")
            skip = True
        else:
            out.append(token)
    return out


def _parse_values(text: str) -> list[float]:
    """A value axis: either lo:step:hi, a comma list, or one number."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("ranges take exactly lo:step:hi")
            lo, step, hi = (float(p) for p in parts)
            if step <= 0.0:
                raise ValueError("range step must be positive")
            if hi < lo:
                raise ValueError("range end must not precede its start")
            n = int(math.floor((hi - lo) / step + 0.5)) + 1
            return [lo + k * step for k in range(n)]
        return [float(p) for p in text.split(",") if p != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"bad value list {text!r}: {exc}") from None


def _values_arg(text: str) -> list[float]:
    values = _parse_values(text)
    if not values:
        raise argparse.ArgumentTypeError(f"empty value list {text!r}")
    return values


def _add_plant_flags(sub):
    sub.add_argument("--plant", choices=sorted(PLANT_PRESETS),
                     help="plant preset")
    sub.add_argument("--plant-gain", type=float,
                     help="explicit plant gain (with --plant-tau)")
    sub.add_argument("--plant-tau", type=float,
                     help="explicit plant time constant (with --plant-gain)")


def _resolve_plant(args, parser, *, fallback: PlantModel | None = None,
                   required: bool = True) -> PlantModel | None:
    explicit = args.plant_gain is not None or args.plant_tau is not None
    if explicit:
        if args.plant_gain is None or args.plant_tau is None:
            parser.error("--plant-gain and --plant-tau go together")
        return PlantModel(gain=args.plant_gain, tau=args.plant_tau)
    if args.plant is not None:
        return PLANT_PRESETS[args.plant]
    if fallback is not None:
        return fallback
    if required:
        parser.error("no plant: give --plant or --plant-gain/--plant-tau")
    return None


def _add_simplex_flags(sub):
    sub.add_argument("--max-evals", type=int, default=None,
                     help="evaluation budget for the simplex search")
    sub.add_argument("--restarts", type=int, default=None,
                     help="restarts from the perturbed best vertex")


def _resolve_simplex(args) -> SimplexConfig:
    config = SimplexConfig()
    if args.max_evals is not None:
        config = replace(config, max_evals=args.max_evals)
    if args.restarts is not None:
        config = replace(config, restarts=args.restarts)
    return config


def _read_session_arg(path: str, parser, **kwargs) -> Session:
    try:
        return read_session(path, **kwargs)
    except (OSError, SessionFileError, SessionInvariantError) as exc:
        parser.error(f"cannot read session {path!r}: {exc}")


def _cmd_simulate(args, parser) -> int:
    plant = _resolve_plant(args, parser,
                           fallback=PLANT_PRESETS["paper-eq6"])
    if args.duration < args.step:
        parser.error(f"duration {args.duration} is shorter than one step")
    params = {"kp": args.kp, "alpha": args.alpha, "delay": args.delay,
              "tl": args.tl, "ti": args.ti, "tn": args.tn,
              "zero": args.zero if args.zero is not None
              else 1.0 / plant.tau}
    try:
        model = model_from_params(args.model, params)
    except ValueError as exc:
        parser.error(str(exc))
    if args.input is not None:
        source = _read_session_arg(args.input, parser)
        if source.i is None:
            parser.error(f"input session {args.input!r} has no i signal")
        input_i = source.i
        if input_i.step != args.step:
            print(f"note: resampling input from step {input_i.step:g} "
                  f"to {args.step:g}", file=sys.stderr)
            input_i = resample(input_i, args.step)
    else:
        input_i = generate_forcing(ForcingSpec.default(seed=args.forcing_seed),
                                   args.step, args.duration)
    needed = int(round(args.duration / args.step))
    if len(input_i) < needed:
        parser.error(
            f"input provides {len(input_i)} samples at step {args.step}, "
            f"duration {args.duration} needs {needed}")
    config = LoopConfig(operator=model, plant=plant, step=args.step,
                        duration=args.duration)
    session = simulate(config, input_i,
                       stability_bound=args.stability_bound)
    if args.created_at is not None:
        session = replace(
            session, meta=replace(session.meta, created_at=args.created_at))
    csv_path, _ = write_session(session, args.out)
    print(f"session={csv_path}")
    print(f"rmse={rmse_cost(session.m, session.i):.17g}")
    return _EXIT_OK


def _cmd_fit(args, parser) -> int:
    session = _read_session_arg(args.session, parser)
    mode = _MODE_BY_FLAG[args.mode]
    plant = _resolve_plant(args, parser, fallback=session.meta.plant,
                           required=(mode == "closed_loop"))
    config = _resolve_simplex(args)
    initial = None
    if args.init:
        initial = {}
        for pair in args.init.split(","):
            name, _, value = pair.partition("=")
            if not _:
                parser.error(f"bad --init entry {pair!r}, want name=value")
            try:
                initial[name.strip()] = float(value)
            except ValueError:
                parser.error(f"bad --init value in {pair!r}")
    try:
        result = fit(session, args.model, plant, mode=mode,
                     config=config, initial=initial,
                     fix_delay=args.fix_delay, zero=args.zero)
    except ValueError as exc:
        parser.error(str(exc))
    out = args.out if args.out else f"{args.session}.fit-{args.model}.json"
    write_fit_report(result, out)
    pairs = [f"model={result.model_kind}", f"rmse={result.rmse:.17g}"]
    pairs += [f"{name}={value:.17g}"
              for name, value in result.params.items()]
    print(" ".join(pairs))
    print(f"evaluations={result.evaluations}")
    print(f"converged={'true' if result.converged else 'false'}")
    print(f"report={out}")
    return _EXIT_OK if result.converged else _EXIT_NO_CONVERGENCE


def _cmd_scan(args, parser) -> int:
    session = _read_session_arg(args.session, parser)
    plant = _resolve_plant(args, parser, fallback=session.meta.plant)
    try:
        grid = scan_alpha_delay_kp(
            session, plant, alpha_values=args.alpha,
            delay_values=args.delay, kp_values=args.kp, jobs=args.jobs)
    except ValueError as exc:
        parser.error(str(exc))
    out = args.out if args.out else f"{args.session}.scan.csv"
    write_scan_grid(grid, out)
    best = grid.argmin()
    for name, value in best.items():
        print(f"{name}={value:.17g}")
    print(f"grid={out}")
    return _EXIT_OK


def _cmd_sweep(args, parser) -> int:
    session = _read_session_arg(args.session, parser)
    mode = _MODE_BY_FLAG[args.mode]
    plant = _resolve_plant(args, parser, fallback=session.meta.plant,
                           required=(mode == "closed_loop"))
    config = _resolve_simplex(args)
    try:
        results = sweep_delay(
            session, args.model, plant, delay_values=args.delay,
            mode=mode, config=config, zero=args.zero, jobs=args.jobs)
    except ValueError as exc:
        parser.error(str(exc))
    out = args.out if args.out else f"{args.session}.sweep-{args.model}.csv"
    write_sweep_results(results, out)
    converged = [r for r in results if r.converged]
    print(f"points={len(results)}")
    print(f"converged={len(converged)}")
    if converged:
        best = min(converged, key=lambda r: r.rmse)
        print(f"best_delay={best.params['delay']:.17g}")
        print(f"best_rmse={best.rmse:.17g}")
    print(f"table={out}")
    return _EXIT_OK if converged else _EXIT_NO_CONVERGENCE


def _cmd_forcing(args, parser) -> int:
    if args.duration < args.step:
        parser.error(f"duration {args.duration} is shorter than one step")
    spec = ForcingSpec.default(seed=args.seed, n_components=args.components,
                               rms=args.rms)
    signal = generate_forcing(spec, args.step, args.duration)
    session = Session(step=args.step, i=signal,
                      meta=SessionMeta(source="synthetic",
                                       created_at=args.created_at))
    csv_path, _ = write_session(session, args.out)
    print(f"session={csv_path}")
    print(f"samples={len(signal)}")
    print(f"rms={float(np.sqrt(np.mean(signal.values ** 2))):.17g}")
    return _EXIT_OK


def _cmd_validate(args, parser) -> int:
    try:
        session = read_session(args.session, check=False)
    except (OSError, SessionFileError) as exc:
        print(f"violation={exc}")
        print("valid=false")
        return _EXIT_INVALID
    violations = session.validate(identity_tol=args.identity_tol)
    for violation in violations:
        print(f"violation={violation}")
    print(f"valid={'false' if violations else 'true'}")
    return _EXIT_INVALID if violations else _EXIT_OK


def _cmd_report(args, parser) -> int:
    wrote = []
    out_dir = report_mod.ensure_out_dir(args.out_dir)
    session = None
    if args.session:
        session = _read_session_arg(args.session, parser)
        base = args.session.rsplit("/", 1)[-1].removesuffix(".csv")
        wrote += report_mod.render_session(
            session, f"{out_dir}/{base}_traces.png", title=base)
    if args.scan:
        columns = read_table_csv(args.scan)
        base = args.scan.rsplit("/", 1)[-1].removesuffix(".csv")
        wrote += report_mod.render_scan(columns, f"{out_dir}/{base}")
    if args.sweep:
        columns = read_table_csv(args.sweep)
        base = args.sweep.rsplit("/", 1)[-1].removesuffix(".csv")
        wrote += report_mod.render_sweep(columns,
                                         f"{out_dir}/{base}_params.png")
    if args.fit:
        if session is None:
            parser.error("--fit needs --session for the overlay")
        result = read_fit_report(args.fit)
        plant = _resolve_plant(args, parser, fallback=session.meta.plant)
        base = args.fit.rsplit("/", 1)[-1].removesuffix(".json")
        try:
            wrote += report_mod.render_fit(
                session, result, plant, f"{out_dir}/{base}_overlay.png")
        except ValueError as exc:
            parser.error(str(exc))
    if not wrote:
        parser.error("nothing to render: give --session, --scan, "
                     "--sweep, or --fit")
    for path in wrote:
        print(f"figure={path}")
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="operfit",
        description="Operator models for compensatory tracking: simulate, "
                    "identify, and report.")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate",
                          help="run the closed loop and write a session")
    sim.add_argument("--model", choices=MODEL_KINDS, default="yp3")
    sim.add_argument("--kp", type=float, default=1.0)
    sim.add_argument("--alpha", type=float, default=-0.5,
                     help="yp3 differintegration order")
    sim.add_argument("--L", "--delay", dest="delay", type=float,
                     default=0.1, help="operator dead time [s]")
    sim.add_argument("--tl", type=float, default=0.0, help="yp1 lead")
    sim.add_argument("--ti", type=float, default=0.0, help="yp1 lag")
    sim.add_argument("--tn", type=float, default=0.0,
                     help="yp1 neuromuscular lag")
    sim.add_argument("--zero", type=float, default=None,
                     help="yp2 zero location (default: 1/plant tau)")
    _add_plant_flags(sim)
    sim.add_argument("--step", type=float, default=0.01)
    sim.add_argument("--duration", type=float, default=60.0)
    sim.add_argument("--forcing-seed", type=int, default=0)
    sim.add_argument("--input", help="take i from this session instead")
    sim.add_argument("--stability-bound", type=float, default=1e6)
    sim.add_argument("--created-at",
                     help="ISO-8601 stamp for the metadata")
    sim.add_argument("--out", required=True,
                     help="session base path (writes .csv and .json)")
    sim.set_defaults(handler=_cmd_simulate)

    fit_p = subs.add_parser("fit", help="identify one model on a session")
    fit_p.add_argument("--session", required=True)
    fit_p.add_argument("--model", choices=MODEL_KINDS, required=True)
    fit_p.add_argument("--mode", choices=sorted(_MODE_BY_FLAG),
                       default="closed")
    fit_p.add_argument("--fix-L", "--fix-delay", dest="fix_delay",
                       type=float, default=None,
                       help="hold the dead time instead of searching it")
    fit_p.add_argument("--zero", type=float, default=None,
                       help="yp2 zero location (default: 1/plant tau)")
    fit_p.add_argument("--init",
                       help="starting overrides, e.g. kp=2,alpha=-0.3")
    _add_plant_flags(fit_p)
    _add_simplex_flags(fit_p)
    fit_p.add_argument("--out", help="fit report JSON path")
    fit_p.set_defaults(handler=_cmd_fit)

    scan = subs.add_parser("scan",
                           help="dense RMSE lattice for the yp3 model")
    scan.add_argument("--session", required=True)
    scan.add_argument("--alpha", type=_values_arg, default=None,
                      help="lo:step:hi or comma list "
                           "(default -0.95:0.05:-0.05)")
    scan.add_argument("--L", "--delay", dest="delay", type=_values_arg,
                      default=None,
                      help="dead-time axis (default 0:0.05:0.4)")
    scan.add_argument("--kp", type=_values_arg, default=None,
                      help="gain axis (default 1,3,5,7)")
    _add_plant_flags(scan)
    scan.add_argument("--jobs", type=int, default=1)
    scan.add_argument("--out", help="grid CSV path")
    scan.set_defaults(handler=_cmd_scan)

    sweep = subs.add_parser("sweep",
                            help="fixed-delay fits across a delay lattice")
    sweep.add_argument("--session", required=True)
    sweep.add_argument("--model", choices=MODEL_KINDS, required=True)
    sweep.add_argument("--L", "--delay", dest="delay", type=_values_arg,
                       default=None,
                       help="dead-time axis (default 0.01:0.01:0.60)")
    sweep.add_argument("--mode", choices=sorted(_MODE_BY_FLAG),
                       default="closed")
    sweep.add_argument("--zero", type=float, default=None)
    _add_plant_flags(sweep)
    _add_simplex_flags(sweep)
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--out", help="sweep CSV path")
    sweep.set_defaults(handler=_cmd_sweep)

    forcing = subs.add_parser("forcing",
                              help="write a standalone forcing session")
    forcing.add_argument("--seed", type=int, default=0)
    forcing.add_argument("--components", type=int, default=10)
    forcing.add_argument("--rms", type=float, default=1.0)
    forcing.add_argument("--step", type=float, default=0.01)
    forcing.add_argument("--duration", type=float, default=60.0)
    forcing.add_argument("--created-at")
    forcing.add_argument("--out", required=True)
    forcing.set_defaults(handler=_cmd_forcing)

    val = subs.add_parser("validate", help="check session invariants")
    val.add_argument("--session", required=True)
    val.add_argument("--identity-tol", type=float, default=None,
                     help="loop-identity tolerance (default 1e-6)")
    val.set_defaults(handler=_cmd_validate)

    rep = subs.add_parser("report",
                          help="render figures from toolkit files")
    rep.add_argument("--session", help="session base for trace plots")
    rep.add_argument("--scan", help="scan grid CSV")
    rep.add_argument("--sweep", help="sweep CSV")
    rep.add_argument("--fit", help="fit report JSON (needs --session)")
    _add_plant_flags(rep)
    rep.add_argument("--out-dir", default=".")
    rep.set_defaults(handler=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args, parser)
    except SystemExit as exc:
        # parser.error inside a handler.
        return int(exc.code or 0)
    except UnstableLoopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DIVERGED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
