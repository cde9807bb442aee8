"""Command-line front end: ``swarmplan {plan,allocate,mission,bench}``.

Every command writes ``manifest.json`` into ``--out-dir`` before doing any
work, and writes nothing outside that directory.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import sys
from dataclasses import asdict, replace

from . import __version__
from .allocation import GaConfig, brute_force_allocation, solve_allocation
from .benchfx import FUNCTION_NAMES, OPTIMIZERS, format_table, run_comparison, write_records_csv, write_report_csv
from .environment import __doc__ as _SCENARIO_DOC
from .environment import load_scenario_file
from .errors import ConfigurationError, MissionError, OracleRefusedError, ScenarioError, SwarmPlanError
from .mission import PlannerSettings, load_events, mission_config_from_dict, run_mission, write_run_dir
from .objectives import TrajectoryProblem
from .pe_pso import init_swarm, pool_best, record, step
from .scenarios import BUILTIN

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EMPTY_POOL = 2
EXIT_ORACLE_REFUSED = 3
EXIT_MISSION = 4

_SCHEMA_HELP = _SCENARIO_DOC.split("Scenario documents are JSON with the layout::", 1)[-1]

EPILOG = f"""\
scenario files (JSON):
{_SCHEMA_HELP}
  A scenario argument may also be builtin:<name>, one of: {', '.join(BUILTIN)}.

exit codes:
  0 success, 1 config/validation error, 2 empty trajectory pool,
  3 oracle refused, 4 mission failure

environment:
  SWARMPLAN_THREADS caps benchmark worker threads (0 = auto)
"""


def _log(args, msg):
    if not args.quiet:
        print(msg)


def _scenario(ref: str):
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        if name not in BUILTIN:
            raise ConfigurationError(f"unknown builtin scenario {name!r}; choose from {', '.join(BUILTIN)}")
        return BUILTIN[name]()
    return load_scenario_file(ref)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(args, config_paths):
    os.makedirs(args.out_dir, exist_ok=True)
    _write_json(os.path.join(args.out_dir, "manifest.json"), {
        "command": args.command,
        "config_paths": [os.path.abspath(p) if not p.startswith("builtin:") else p for p in config_paths],
        "seed": args.seed,
        "version": __version__,
        "started": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "out_dir": os.path.abspath(args.out_dir),
        "argv": sys.argv[1:],
    })


# --- commands -----------------------------------------------------------------------

def cmd_plan(args) -> int:
    _manifest(args, [args.scenario])
    scenario = _scenario(args.scenario)
    if not 0 <= args.uav < scenario.n_uavs:
        raise ConfigurationError(f"--uav {args.uav} out of range (scenario has {scenario.n_uavs})")
    if not 0 <= args.task < scenario.n_tasks:
        raise ConfigurationError(f"--task {args.task} out of range (scenario has {scenario.n_tasks})")
    iterations = 200 if args.iterations is None else args.iterations
    if iterations < 0:
        raise ConfigurationError("--iterations must be >= 0")
    settings = PlannerSettings(n_samples=args.samples)
    problem = TrajectoryProblem(scenario, scenario.uav_starts[args.uav], scenario.tasks[args.task],
                                n_free=settings.n_free, order=settings.order, n_samples=settings.n_samples)
    config = settings.swarm_config(problem.lower, problem.upper, args.seed)
    state = init_swarm(config, problem.fitness, problem.straight_line() if settings.seed_straight_line else None)
    history = []
    for _ in range(iterations):
        state = step(state, problem.fitness, config, problem.legality)
        history.append(record(state))

    _write_rows(os.path.join(args.out_dir, "convergence.csv"),
                ("iteration", "gbest_fitness", "entropy", "w", "c1", "c2", "pool_size"),
                [tuple(r) for r in history])
    best = pool_best(state.pool)
    if best is None:
        print(f"no legal trajectory after {iterations} iterations", file=sys.stderr)
        return EXIT_EMPTY_POOL
    path = problem.path(best)
    _write_rows(os.path.join(args.out_dir, "trajectory.csv"), ("u", "x", "y", "z"),
                [(u, *p) for u, p in zip(path.u.tolist(), path.points.tolist())])
    cost = problem.breakdown(best).as_dict()
    _write_json(os.path.join(args.out_dir, "cost.json"), {
        "uav": args.uav, "task": args.task, "iterations": iterations, "cost": cost,
        "control_points": problem.control_points(best).tolist(),
    })
    _log(args, f"legal trajectory, cost {cost['total']:.4f}, length {cost['distance']:.3f} m")
    return EXIT_OK


def cmd_allocate(args) -> int:
    _manifest(args, [args.scenario])
    scenario = _scenario(args.scenario)
    ga = GaConfig(population=args.population, generations=args.generations, seed=args.seed)
    assignment, cost = solve_allocation(scenario, ga)
    out = {"assignment": assignment.to_list(), "cost": cost.as_dict(), "seed": args.seed, "ga": asdict(ga)}
    code = EXIT_OK
    if args.oracle:
        try:
            exact, exact_cost = brute_force_allocation(scenario)
        except OracleRefusedError as exc:
            print(f"oracle refused: {exc}", file=sys.stderr)
            code = EXIT_ORACLE_REFUSED
        else:
            out["oracle"] = {
                "assignment": exact.to_list(),
                "cost": exact_cost.as_dict(),
                "gap": cost.total - exact_cost.total,
            }
    _write_json(os.path.join(args.out_dir, "assignment.json"), out)
    _log(args, f"assignment {assignment.to_list()} cost {cost.total:.4f}"
         + (f" gap {out['oracle']['gap']:.4g}" if "oracle" in out else ""))
    return code


def cmd_mission(args) -> int:
    paths = [args.config] + ([args.events] if args.events else [])
    _manifest(args, paths)
    if args.config.startswith("builtin:"):
        data, base = {"scenario": args.config}, "."
    else:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{args.config}: malformed JSON: {exc}") from exc
        base = os.path.dirname(os.path.abspath(args.config))
    if not isinstance(data, dict):
        raise ConfigurationError("mission config must be a JSON object")
    config = mission_config_from_dict(data, base)
    overrides = {"seed": args.seed}
    if args.budget_mode:
        overrides["budget_mode"] = args.budget_mode
    if args.iterations is not None:
        overrides["replan_iterations"] = args.iterations
    if args.t_max is not None:
        overrides["t_max"] = args.t_max
    if args.events:
        overrides["events"] = load_events(args.events)
    overrides["planner"] = replace(config.planner, n_samples=args.samples)
    config = replace(config, **overrides)
    log = run_mission(config)
    write_run_dir(log, config, args.out_dir)
    _log(args, f"mission {'complete' if log.completed else 'stopped at max_sim_time'}: "
         f"{len(log.visits)} tasks visited, {len(log.accepted)} trajectories, "
         f"{len(log.replans)} replans, {len(log.stalls)} stalls, t={log.sim_time:g}s")
    return EXIT_OK if log.completed else EXIT_MISSION


def cmd_bench(args) -> int:
    _manifest(args, [])
    functions = [f.strip() for f in args.functions.split(",") if f.strip()]
    optimizers = [o.strip() for o in args.optimizers.split(",") if o.strip()]
    iterations = 200 if args.iterations is None else args.iterations
    rows, records = run_comparison(functions, optimizers, n_seeds=args.seeds, iterations=iterations,
                                   dimension=args.dim, base_seed=args.seed)
    write_report_csv(rows, os.path.join(args.out_dir, "bench_report.csv"))
    write_records_csv(records, os.path.join(args.out_dir, "bench_runs.csv"))
    _log(args, format_table(rows))
    return EXIT_OK


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    common.add_argument("--out-dir", default="swarmplan-out", help="directory for all outputs")
    common.add_argument("--iterations", type=int, default=None,
                        help="optimizer iterations (plan/bench: 200; mission: per-replan budget)")
    common.add_argument("--samples", type=int, default=50, help="samples per trajectory (default 50)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(prog="swarmplan", description=__doc__.splitlines()[0],
                                     epilog=EPILOG, formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="plan one UAV leg", epilog=EPILOG, formatter_class=fmt)
    p.add_argument("scenario", help="scenario JSON file or builtin:<name>")
    p.add_argument("--uav", type=int, default=0, help="index of the UAV whose start is used")
    p.add_argument("--task", type=int, default=0, help="index of the goal task")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("allocate", parents=[common], help="assign tasks to UAVs with the GA",
                       epilog=EPILOG, formatter_class=fmt)
    p.add_argument("scenario", help="scenario JSON file or builtin:<name>")
    p.add_argument("--oracle", action="store_true", help="compare with the exhaustive optimum (small instances)")
    p.add_argument("--generations", type=int, default=200)
    p.add_argument("--population", type=int, default=50)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("mission", parents=[common], help="run a full multi-UAV mission",
                       epilog=EPILOG, formatter_class=fmt)
    p.add_argument("config", help="mission config JSON, plain scenario JSON, or builtin:<name>")
    p.add_argument("--budget-mode", choices=("iterations", "wallclock"), default=None,
                   help="replan budget: fixed iteration count (deterministic) or t_max seconds")
    p.add_argument("--t-max", type=float, default=None, help="wall-clock replan budget in seconds")
    p.add_argument("--events", default=None, help="JSON list of scripted events (overrides the config's)")
    p.set_defaults(func=cmd_mission)

    p = sub.add_parser("bench", parents=[common], help="compare PE-PSO with vanilla PSO on benchmarks",
                       formatter_class=fmt)
    p.add_argument("--functions", default=",".join(FUNCTION_NAMES),
                   help=f"comma list from: {', '.join(FUNCTION_NAMES)}")
    p.add_argument("--optimizers", default=",".join(OPTIMIZERS))
    p.add_argument("--seeds", type=int, default=20, help="seeds per (function, optimizer), >= 2")
    p.add_argument("--dim", type=int, default=10)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.samples < 2:
        print("error: --samples must be >= 2", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except MissionError as exc:
        print(f"mission failed: {exc}", file=sys.stderr)
        return EXIT_MISSION
    except OracleRefusedError as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return EXIT_ORACLE_REFUSED
    except (ScenarioError, ConfigurationError, SwarmPlanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
