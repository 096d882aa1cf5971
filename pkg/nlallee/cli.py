"""Command-line interface: python -m nlallee <command> [options]."""
import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

from nlallee.config import OracleSpec, RunConfig, load_config
from nlallee.errors import DomainError, MissingRecord, NlAlleeError, SolverError
from nlallee.experiments import (
    build_initial,
    classify_outcome,
    estimate_alpha_star,
    run_sweep,
    run_trait_scan,
    simulate,
)
from nlallee.model import ModelParams
from nlallee.monitor import run_monitors
from nlallee.oracle import BistableParams, expected_front_speed, local_regime, run_front_speed
from nlallee.regimes import classify_regime, predict_outcome, thresholds
from nlallee.spectral import DEFAULT_NTHETA, check_eigenfunction_shape, lambda_bounds, solve_eigen
from nlallee import util

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_MONITOR = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(args) -> RunConfig:
    if args.config is None:
        return RunConfig()
    return load_config(args.config)


def _out_dir(args, config: RunConfig) -> str:
    directory = args.out if args.out is not None else config.output.dir
    os.makedirs(directory, exist_ok=True)
    return directory


def _workers(args, default: int = 1) -> int:
    return args.workers if args.workers is not None else default


def _params_from_flags(args, config: RunConfig) -> ModelParams:
    """Model parameters from the config, overridden by any explicit flag."""
    base = config.model
    values = {
        "d": base.d if base else 1.0,
        "alpha": base.alpha if base else None,
        "theta_min": base.theta_min if base else None,
        "theta_max": base.theta_max if base else None,
    }
    for name in ("alpha", "theta_min", "theta_max"):
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    missing = [name for name, value in values.items() if value is None]
    if missing:
        raise DomainError(f"missing model parameter(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")
    params = ModelParams(**values)
    if getattr(args, "shift", 0.0):
        params = params.shifted(args.shift)
    return params


def _fmt(value):
    return "none" if value is None else f"{value:.12g}"


def simulate_command(args) -> int:
    config = _load(args)
    params = config.require_model()
    if not config.integrator.keep_snapshots:
        raise DomainError("simulate needs integrator.keep_snapshots = true")
    out = _out_dir(args, config)

    traj = simulate(params, config.initial, config.simulation)
    util.write_csv(util.trajectory_frame(traj), os.path.join(out, "trajectory.csv"))

    times = config.output.snapshot_times or tuple(traj.times)
    for t in times:
        util.write_snapshot(traj.snapshot_at(t), os.path.join(out, util.snapshot_filename(t)))

    try:
        outcome = classify_outcome(traj, config.grid.x_hi - config.grid.x_lo)
        outcome_line = f"outcome={outcome} N_half={outcome.n_half:.12g} N_end={outcome.n_end:.12g}"
    except MissingRecord as exc:
        outcome_line = f"outcome=Unclassified ({exc})"

    options = config.monitor
    if options.core_L is None:
        options = replace(options, core_L=config.initial.L)
    report = run_monitors(traj, params, options)

    with open(os.path.join(out, "outcome.txt"), "w") as f:
        f.write(outcome_line + "\n")
    with open(os.path.join(out, "monitor.txt"), "w") as f:
        f.write("\n".join(report.to_lines()) + "\n")
    util.write_csv(report.to_frame(), os.path.join(out, "monitor.csv"))

    if args.porcelain:
        print(f"{outcome_line} monitors={'pass' if report.passed else 'fail'}")
    else:
        print(outcome_line)
        print("\n".join(report.to_lines()))
    if args.strict and not report.passed:
        return EXIT_MONITOR
    return EXIT_OK


def eigen_command(args) -> int:
    params = _params_from_flags(args, _load(args))
    pair = solve_eigen(params, args.ntheta)
    bounds = lambda_bounds(params)
    shape = check_eigenfunction_shape(pair)

    if args.porcelain:
        print(
            f"lambda={pair.lam:.17g} lower={bounds.lower:.17g} upper={bounds.upper:.17g} "
            f"conditional_upper={_fmt(bounds.conditional_upper)} shape={'pass' if shape.passed else 'fail'}"
        )
    else:
        print(f"lambda          = {pair.lam:.12g}   (alpha={params.alpha:g}, ntheta={pair.ntheta})")
        print(f"bounds          = ({bounds.lower:.12g}, {bounds.upper:.12g})")
        print(f"small-alpha cap = {_fmt(bounds.conditional_upper)}")
        print(f"shape           = {shape}")
    return EXIT_OK


def regime_command(args) -> int:
    config = _load(args)
    params = _params_from_flags(args, config)
    pair = solve_eigen(params, args.ntheta)

    initial = build_initial(config.initial, config.grid.build(params), params)
    M = float(initial.derived().rho.max())
    u0_sup = float(initial.u.max())

    report = classify_regime(params, pair, M)
    limits = thresholds(params, pair, M)
    prediction = predict_outcome(params, pair, u0_sup, M)

    if args.porcelain:
        print(
            f"cell={report.cell.value} lambda={report.lam:.17g} alpha_sharp={_fmt(limits.alpha_sharp)} "
            f"u0_sup_bound={_fmt(limits.u0_sup_bound)} prediction={prediction.outcome.value}"
        )
        return EXIT_OK

    print(f"cell              = {report}")
    for note in report.notes:
        print(f"  {note}")
    print(f"u0 sup bound      = {_fmt(limits.u0_sup_bound)}")
    print(f"alpha_sharp       = {_fmt(limits.alpha_sharp)}")
    print(f"lambda1 Dirichlet = {limits.lambda1_dirichlet:.12g}")
    print(f"eta_star          = {_fmt(limits.eta_star)}")
    print(f"prediction        = {prediction.outcome.value} (M={M:.6g}, sup u0={u0_sup:.6g})")
    for note in prediction.notes:
        print(f"  {note}")
    return EXIT_OK


def sweep_command(args) -> int:
    config = _load(args)
    params = config.require_model()
    if config.sweep is None:
        raise DomainError("sweep needs a sweep section (sweep.alpha, sweep.L)")
    out = _out_dir(args, config)

    result = run_sweep(params, config.sweep.alpha, config.sweep.L, config.simulation, _workers(args))
    estimate = estimate_alpha_star(result)
    footer = [
        "alpha_star=none"
        if estimate is None
        else f"alpha_star={estimate.alpha_star:.17g} uncertainty={estimate.uncertainty:.17g}"
    ]
    util.write_csv(util.sweep_frame(result), os.path.join(out, "sweep.csv"), footer=footer)
    if config.output.gnuplot:
        util.write_gnuplot_matrix(result, os.path.join(out, "sweep_matrix.dat"))

    print(footer[0])
    failed = sum(1 for row in result.labels for outcome in row if outcome.note)
    if failed == len(result.alpha_values) * len(result.L_values):
        logger.error("sweep: every cell failed")
        return EXIT_SOLVER
    return EXIT_OK


def scan_command(args) -> int:
    config = _load(args)
    params = config.require_model()
    if config.scan is None:
        raise DomainError("scan needs a scan section (scan.theta_tilde, scan.L, scan.sigma)")
    out = _out_dir(args, config)

    spec = config.scan
    result = run_trait_scan(
        params, spec.theta_tilde, spec.L, spec.sigma, config.simulation, _workers(args), control=spec.control
    )
    footer = [f"threshold={_fmt(result.threshold)}"]
    if result.control is not None:
        footer.append(f"uniform_control={result.control}")
    frame = pd.DataFrame.from_records(list(result.records()), columns=["theta_tilde", "label", "N_half", "N_end"])
    util.write_csv(frame, os.path.join(out, "scan.csv"), footer=footer)

    print(" ".join(footer))
    if all(outcome.note for _, outcome in result.entries):
        return EXIT_SOLVER
    return EXIT_OK


def oracle_command(args) -> int:
    config = _load(args)
    spec = config.oracle
    if spec is None:
        spec = OracleSpec()
    out = _out_dir(args, config)

    rows = []
    for theta0 in spec.theta0:
        p = BistableParams(d=spec.d, theta0=theta0)
        regime = local_regime(theta0)
        row = {
            "theta0": theta0,
            "expected": expected_front_speed(p),
            "measured": np.nan,
            "r_squared": np.nan,
            "outcome": regime.outcome,
            "front": regime.front,
            "note": "",
        }
        try:
            estimate = run_front_speed(
                p, spec.x_lo, spec.x_hi, spec.nx, spec.t_end, spec.plateau_width, spec.level
            )
            row["measured"] = estimate.speed
            row["r_squared"] = estimate.r_squared
        except SolverError as exc:
            logger.warning("oracle theta0=%g: %s", theta0, exc)
            row["note"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
        print(f"theta0={theta0:g} expected={row['expected']:.6g} measured={row['measured']:.6g}")

    frame = pd.DataFrame.from_records(rows)
    util.write_csv(frame, os.path.join(out, "oracle.csv"))
    if all(row["note"] for row in rows):
        return EXIT_SOLVER
    return EXIT_OK


def monitor_command(args) -> int:
    config = _load(args)
    params = config.require_model()
    directory = args.snapshots if args.snapshots is not None else _out_dir(args, config)
    traj = util.read_snapshots(directory, params)

    options = config.monitor
    if options.core_L is None:
        options = replace(options, core_L=config.initial.L)
    report = run_monitors(traj, params, options)

    if args.porcelain:
        print(f"monitors={'pass' if report.passed else 'fail'} failed={','.join(c.name for c in report.failures())}")
    else:
        print("\n".join(report.to_lines()))
    if args.strict and not report.passed:
        return EXIT_MONITOR
    return EXIT_OK


def _add_model_flags(parser):
    parser.add_argument("--alpha", type=float, help="mutation coefficient")
    parser.add_argument("--theta-min", dest="theta_min", type=float, help="lower end of the trait interval")
    parser.add_argument("--theta-max", dest="theta_max", type=float, help="upper end of the trait interval")
    parser.add_argument("--shift", type=float, default=0.0, help="shift both trait bounds by this amount")
    parser.add_argument(
        "--ntheta", type=int, default=DEFAULT_NTHETA, help="trait nodes for the eigenproblem (default: %(default)s)"
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--workers", type=int, help="worker processes for sweeps and scans")
    common.add_argument("--strict", action="store_true", help="exit 3 when a monitor check fails")
    common.add_argument("--porcelain", action="store_true", help="single-line machine-readable output")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")

    parser = _Parser(prog="nlallee", description="Nonlocal Allee-effect model with an evolving threshold trait")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    simulate_parser = subparsers.add_parser("simulate", parents=[common], help="run one simulation")
    simulate_parser.set_defaults(func=simulate_command)

    eigen_parser = subparsers.add_parser("eigen", parents=[common], help="principal eigenvalue and eigenfunction")
    _add_model_flags(eigen_parser)
    eigen_parser.set_defaults(func=eigen_command)

    regime_parser = subparsers.add_parser("regime", parents=[common], help="regime cell, thresholds and prediction")
    _add_model_flags(regime_parser)
    regime_parser.set_defaults(func=regime_command)

    sweep_parser = subparsers.add_parser("sweep", parents=[common], help="(alpha, L) phase diagram")
    sweep_parser.set_defaults(func=sweep_command)

    scan_parser = subparsers.add_parser("scan", parents=[common], help="initial-trait scan")
    scan_parser.set_defaults(func=scan_command)

    oracle_parser = subparsers.add_parser("oracle", parents=[common], help="local bistable front speeds")
    oracle_parser.set_defaults(func=oracle_command)

    monitor_parser = subparsers.add_parser("monitor", parents=[common], help="re-check written snapshots")
    monitor_parser.add_argument("--snapshots", help="directory of snapshot files (default: output directory)")
    monitor_parser.set_defaults(func=monitor_command)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return args.func(args)
    except SolverError as exc:
        print(f"nlallee: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DomainError, MissingRecord) as exc:
        print(f"nlallee: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NlAlleeError, OSError) as exc:
        print(f"nlallee: {exc}", file=sys.stderr)
        return EXIT_USAGE
