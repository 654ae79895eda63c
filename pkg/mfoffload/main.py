import argparse
import asyncio
import dataclasses
import logging
import logging.handlers
import math
import os
import sys
import time
from pathlib import Path

from mfoffload.config import Config, config
from mfoffload.errors import (
    EXIT_OK, EXIT_UNEXPECTED, ConvergenceError, FeasibilityError, OffloadError, ValidationError,
)
from mfoffload.models.scenario import GameMode, StationaryScenario
from mfoffload.services import cost_model
from mfoffload.services.export_service import ExportService
from mfoffload.services.finite_service import FiniteSystemEvaluator
from mfoffload.services.mfc_service import MFCSolver
from mfoffload.services.mfg_service import MFGSolver, resolve_mode
from mfoffload.services.queue_service import QueueSimulator, simulate_trajectory, stationary_prediction, write_event_log
from mfoffload.services.scenario_service import parse_policy, parse_scenario
from mfoffload.utils.formatting import format_policy, format_table

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

logger = logging.getLogger(__name__)
_logging_ready = False


def setup_logging(cfg: Config):
    global _logging_ready
    if _logging_ready:
        return
    os.makedirs(cfg.log_dir, exist_ok=True)
    logging.basicConfig(level=cfg.log_level.upper(), format=LOG_FORMAT)

    file_handler = logging.handlers.RotatingFileHandler(
        os.path.join(cfg.log_dir, "mfoffload.log"), maxBytes=10 * 1024 * 1024, backupCount=5, encoding="utf-8",
    )
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(file_handler)
    _logging_ready = True


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a comma-separated list of integers") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfoffload",
        description="Mean-field offloading policies for edge computing: solve, simulate, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-mfg", help="competitive equilibrium via fictitious play")
    p.add_argument("scenario")
    p.add_argument("--iters", type=int, default=config.fp_max_iters)
    p.add_argument("--tol", type=float, default=config.fp_tol)
    p.add_argument("--method", choices=("fictitious", "best-response"), default="fictitious")
    p.add_argument("--init", choices=("best-response", "zeros"), default=None)
    p.add_argument("--mode", choices=[m.value for m in GameMode], default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve-mfc", help="cooperative optimum via grid search and refinement")
    p.add_argument("scenario")
    p.add_argument("--resolution", type=float, default=None)
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--mode", choices=[m.value for m in GameMode], default=None)
    p.add_argument("--lattice-out", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="finite-N queue simulation of a stationary policy")
    p.add_argument("scenario")
    p.add_argument("--policy", required=True)
    p.add_argument("-N", dest="n_list", type=_int_list, default=[5, 10, 25, 50, 100])
    p.add_argument("--trajectories", type=int, default=config.sim_trajectories)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--grid", type=int, default=config.sim_grid_points)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-local", action="store_true")
    p.add_argument("--pool-sharing", choices=("system", "pool"), default=config.pool_sharing)
    p.add_argument("--event-log", default=None)
    p.add_argument("--workers", type=int, default=config.workers)
    p.add_argument("--out", required=True)

    p = sub.add_parser("finite-eval", help="Monte Carlo evaluation in the finite one-shot system")
    p.add_argument("scenario")
    p.add_argument("--policy", required=True)
    p.add_argument("-N", dest="n_list", type=_int_list, default=[5, 10, 25, 50, 100])
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--mode", choices=("exploitability", "coop-deviation", "knapsack-gap"), default="exploitability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=config.workers)
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="selfish equilibrium cost against the cooperative optimum")
    p.add_argument("scenario")
    p.add_argument("--resolution", type=float, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rerun", help="re-execute the command recorded in a run manifest")
    p.add_argument("manifest")
    return parser


def _parameters(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k != "command"}


async def cmd_solve_mfg(args, argv, cfg: Config, export: ExportService) -> int:
    started = time.monotonic()
    scenario = parse_scenario(args.scenario)
    solver = MFGSolver(cfg)
    out = Path(args.out)
    try:
        if args.method == "best-response":
            report = solver.best_response_iteration(scenario, args.mode, max_iters=args.iters, tol=args.tol)
        else:
            report = solver.fictitious_play(scenario, args.mode, args.iters, args.tol, args.init)
    except FeasibilityError as e:
        if e.partial_report is not None and e.partial_report.iterations_run:
            export.write_csv(export.fp_history_frame(e.partial_report), out, "solve-mfg")
        raise

    outputs = [
        export.write_csv(export.fp_history_frame(report), out, "solve-mfg"),
        export.write_json(export.fp_summary(report, args.tol), out.with_suffix(".summary.json")),
    ]
    export.write_manifest(
        out, "solve-mfg", argv, _parameters(args), scenario, outputs, time.monotonic() - started,
        policy=report.final_policy,
    )
    print(format_table(
        ["iterations", "exploitability", "policy"],
        [[report.iterations_run, report.final_exploitability, format_policy(report.final_policy)]],
    ))
    if report.final_exploitability >= args.tol:
        raise ConvergenceError(
            f"exploitability {report.final_exploitability:.3e} is not below tol={args.tol:g} "
            f"after {report.iterations_run} iterations (outputs written)"
        )
    return EXIT_OK


async def cmd_solve_mfc(args, argv, cfg: Config, export: ExportService) -> int:
    started = time.monotonic()
    scenario = parse_scenario(args.scenario)
    solver = MFCSolver(cfg)
    result = solver.solve_mfc(scenario, args.mode, args.resolution, refine=not args.no_refine)

    out = Path(args.out)
    summary = export.mfc_summary(result)
    if out.suffix == ".json":
        outputs = [export.write_json(summary, out)]
    else:
        outputs = [
            export.write_csv(export.mfc_frame(result), out, "solve-mfc"),
            export.write_json(summary, out.with_suffix(".summary.json")),
        ]
    if args.lattice_out:
        points, values = solver.lattice_surface(
            resolve_mode(scenario, args.mode), args.resolution or cfg.default_resolution(scenario.K),
        )
        outputs.append(export.write_csv(export.lattice_frame(points, values), args.lattice_out, "mfc-lattice"))

    export.write_manifest(
        out, "solve-mfc", argv, _parameters(args), scenario, outputs, time.monotonic() - started,
        policy=result.argmin,
    )
    print(format_table(
        ["policy", "value", "evaluations", "refined"],
        [[format_policy(result.argmin), result.value, result.evaluations, result.refined]],
    ))
    return EXIT_OK


async def cmd_simulate(args, argv, cfg: Config, export: ExportService) -> int:
    started = time.monotonic()
    scenario = parse_scenario(args.scenario)
    if not isinstance(scenario, StationaryScenario):
        raise ValidationError("simulate needs a stationary scenario (mode = stationary)")
    policy = parse_policy(args.policy, scenario.K)
    # unstable policies still simulate, the queues just grow
    prediction = stationary_prediction(scenario, policy) if cost_model.stationary_feasible(scenario, policy) else math.nan

    simulator = QueueSimulator(cfg)
    horizon = args.horizon or simulator.default_horizon(scenario)
    grid = simulator.default_grid(horizon, args.grid)

    outputs = []
    ensembles = []
    for n in args.n_list:
        ensembles.append(await simulator.run_ensemble_async(
            scenario, policy, n, horizon, grid, args.trajectories, args.seed,
            include_local=args.include_local, pool_sharing=args.pool_sharing, workers=args.workers,
        ))
        if args.event_log:
            base = Path(args.event_log)
            run = simulate_trajectory(
                scenario, policy, n, horizon, grid, args.seed,
                include_local=args.include_local, pool_sharing=args.pool_sharing, record_events=True,
            )
            outputs.append(write_event_log(run.events, base.with_name(f"{base.stem}_N{n}{base.suffix}")))

    out = Path(args.out)
    outputs.insert(0, export.write_csv(export.ensemble_frame(ensembles, prediction), out, "simulate"))
    export.write_manifest(
        out, "simulate", argv, _parameters(args), scenario, outputs, time.monotonic() - started,
        seed=args.seed, policy=policy,
    )
    print(format_table(
        ["N", "tail mean N_tot/N", "mean field", "gap"],
        [[e.N, e.tail_mean(), prediction, abs(e.tail_mean() - prediction)] for e in ensembles],
    ))
    return EXIT_OK


async def cmd_finite_eval(args, argv, cfg: Config, export: ExportService) -> int:
    started = time.monotonic()
    scenario = parse_scenario(args.scenario)
    policy = parse_policy(args.policy, scenario.K)
    evaluator = FiniteSystemEvaluator(cfg)
    estimate = {
        "exploitability": evaluator.estimate_exploitability_async,
        "coop-deviation": evaluator.estimate_coop_deviation_async,
        "knapsack-gap": evaluator.estimate_knapsack_gap_async,
    }[args.mode]

    results = []
    for n in args.n_list:
        results.append(await estimate(scenario, policy, n, args.samples, args.seed, args.workers))

    out = Path(args.out)
    outputs = [export.write_csv(export.finite_frame(results), out, "finite-eval")]
    export.write_manifest(
        out, "finite-eval", argv, _parameters(args), scenario, outputs, time.monotonic() - started,
        seed=args.seed, policy=policy,
    )
    print(format_table(
        ["N", "estimate", "standard error", "samples"],
        [[r.N, r.estimate, r.standard_error, r.samples] for r in results],
    ))
    return EXIT_OK


async def cmd_compare(args, argv, cfg: Config, export: ExportService) -> int:
    started = time.monotonic()
    scenario = parse_scenario(args.scenario)
    report = MFCSolver(cfg).compare(scenario, args.resolution)
    out = Path(args.out)
    outputs = [export.write_json(export.comparison_summary(report), out)]
    export.write_manifest(out, "compare", argv, _parameters(args), scenario, outputs, time.monotonic() - started)
    print(format_table(
        ["setting", "policy", "cost"],
        [
            ["competitive", format_policy(report.equilibrium), report.equilibrium_cost],
            ["cooperative", format_policy(report.optimum), report.optimum_cost],
        ],
    ))
    return EXIT_OK


COMMANDS = {
    "solve-mfg": cmd_solve_mfg,
    "solve-mfc": cmd_solve_mfc,
    "simulate": cmd_simulate,
    "finite-eval": cmd_finite_eval,
    "compare": cmd_compare,
}


async def run(argv: list[str] | None = None, cfg: Config | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg = cfg or config
    args = build_parser().parse_args(argv)
    setup_logging(cfg)

    try:
        if args.command == "rerun":
            manifest = ExportService().load_manifest(args.manifest)
            logger.info("Replaying %s from %s", manifest["command"], args.manifest)
            return await run(manifest["argv"], cfg)
        if getattr(args, "workers", None):
            cfg = dataclasses.replace(cfg, workers=args.workers)
        return await COMMANDS[args.command](args, argv, cfg, ExportService())
    except OffloadError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Unhandled error: %s", e)
        print(f"unexpected error: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


def main():
    sys.exit(asyncio.run(run()))


if __name__ == "__main__":
    main()
