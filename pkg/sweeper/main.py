"""
Command-line front end for the interferometer backends.

Subcommands: steady, g2tau, compare, regime-map, selftest. Result tables go
to stdout (or --out); logs go to stderr.
"""

import argparse
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

import structlog

from shared import __version__
from shared.config import SolverSettings, load_yaml_config, section_values, solver_settings_from
from shared.errors import ConfigError, InterferometerError, exit_code_for
from shared.logging_config import setup_logging
from shared.models import ComparisonRow, Method
from solvers.exact_fock import check_feasibility, correlation_amplitude
from solvers.observables import METHOD_ORDER, RegimeGrid, regime_map
from sweeper.dispatcher import SweepDispatcher, compare_task, g2tau_task, steady_task
from sweeper.output import Table, render, write_table
from sweeper.run_config import PARAM_NAMES, RunConfig, build_run_config
from sweeper.selftest import run_selftest

logger = structlog.get_logger("sweeper")

PARAM_COLUMNS = ["u_over_gamma", "j_over_gamma", "omega_over_gamma", "phi", "delta_over_gamma"]


class RowFailure(Exception):
    """A grid point failed and --keep-going was not given."""

    def __init__(self, code: int, failure: Dict[str, Any]):
        super().__init__(failure.get("details"))
        self.code = code
        self.failure = failure


def _param_cells(params: Dict[str, Any]) -> Dict[str, Any]:
    g = params["gamma"]
    return {
        "u_over_gamma": params["u"] / g,
        "j_over_gamma": params["j"] / g,
        "omega_over_gamma": params["omega"] / g,
        "phi": params["phi"],
        "delta_over_gamma": params["delta"] / g,
    }


def _tasks(config: RunConfig, settings: SolverSettings, **extra: Any) -> List[Dict[str, Any]]:
    settings_dump = settings.model_dump()
    return [
        {"params": params.model_dump(), "settings": settings_dump, **extra}
        for params in config.points()
    ]


def _check_failure(result: Dict[str, Any], config: RunConfig, first_code: Optional[int]) -> Optional[int]:
    failure = result.get("failure")
    if failure is None:
        return first_code
    if not config.keep_going:
        raise RowFailure(failure["code"], failure)
    return first_code if first_code is not None else failure["code"]


def _cutoff(config: RunConfig, settings: SolverSettings) -> int:
    return settings.default_cutoff if config.cutoff is None else config.cutoff


def cmd_steady(config: RunConfig, settings: SolverSettings,
               dispatcher: SweepDispatcher) -> Tuple[Table, int]:
    """One ObservableRecord row per grid point."""
    if len(config.backends) > 1:
        raise ConfigError("steady takes a single backend", backends=[m.value for m in config.backends])
    method = config.backends[0] if config.backends else Method.EXACT_FOCK
    cutoff = _cutoff(config, settings)
    if method == Method.EXACT_FOCK:
        check_feasibility(cutoff, settings, config.force)

    results = dispatcher.map(steady_task, _tasks(config, settings, method=method.value,
                                                 cutoff=cutoff, force=config.force))
    table = Table(PARAM_COLUMNS + ["method", "n2", "g2_zero", "output_flux", "status", "error",
                                   "diagnostics"])
    first_code = None
    for result in results:
        first_code = _check_failure(result, config, first_code)
        row = _param_cells(result["params"])
        row["method"] = method.value
        if "record" in result:
            record = result["record"]
            row.update(n2=record["n2"], g2_zero=record["g2_zero"], output_flux=record["output_flux"],
                       status="ok", diagnostics=record["diagnostics"])
        else:
            row.update(status="failed", error=result["failure"]["error"])
        table.add(row)
    return table, first_code or 0


def cmd_g2tau(config: RunConfig, settings: SolverSettings,
              dispatcher: SweepDispatcher) -> Tuple[Table, int]:
    """(tau, g2) rows per parameter set; the tau = 0 row is always present."""
    taus = sorted(set([0.0] + list(config.taus)))
    cutoff = _cutoff(config, settings)
    check_feasibility(cutoff, settings, config.force)

    results = dispatcher.map(g2tau_task, _tasks(config, settings, taus=taus, cutoff=cutoff,
                                                force=config.force))
    table = Table(PARAM_COLUMNS + ["tau", "g2", "amplitude", "status", "error"])
    first_code = None
    for result in results:
        first_code = _check_failure(result, config, first_code)
        cells = _param_cells(result["params"])
        if "curve" in result:
            amplitude = correlation_amplitude(result["curve"])
            for tau, g2 in result["curve"]:
                table.add({**cells, "tau": tau, "g2": g2, "amplitude": amplitude, "status": "ok"})
        elif "empty" in result:
            table.add({**cells, "status": "empty", "error": result["empty"]["error"]})
        else:
            table.add({**cells, "status": "failed", "error": result["failure"]["error"]})
    return table, first_code or 0


def _compare_labels(methods: List[Method], cutoffs: List[int]) -> List[str]:
    labels = []
    for method in METHOD_ORDER:
        if method not in methods:
            continue
        if method == Method.EXACT_FOCK:
            labels.extend(f"{method.value}@{c}" for c in sorted(set(cutoffs)))
        else:
            labels.append(method.value)
    return labels


def cmd_compare(config: RunConfig, settings: SolverSettings,
                dispatcher: SweepDispatcher) -> Tuple[Table, int]:
    """Per-method n2 and g2 side by side with pairwise deviations."""
    methods = config.backends
    if len(methods) < 2:
        raise ConfigError("compare needs at least two backends", backends=[m.value for m in methods])
    cutoffs = config.cutoffs or [_cutoff(config, settings)]
    labels = _compare_labels(methods, cutoffs)
    pairs = [f"{a}~{b}" for i, a in enumerate(labels) for b in labels[i + 1:]]
    trends = [label for label in labels if not label.startswith(f"{Method.EXACT_FOCK.value}@")]
    if Method.EXACT_FOCK not in methods or len(set(cutoffs)) < 2:
        trends = []

    columns = list(PARAM_COLUMNS)
    for label in labels:
        columns += [f"n2:{label}", f"g2_zero:{label}", f"valid:{label}", f"error:{label}"]
    columns += [f"dev:{pair}" for pair in pairs] + [f"approaches:{label}" for label in trends]
    columns += ["status", "error"]
    table = Table(columns)

    options = {"cutoffs": cutoffs, "force": config.force}
    results = dispatcher.map(compare_task, _tasks(config, settings, options=options,
                                                  methods=[m.value for m in methods]))
    for result in results:
        cells = _param_cells(result["params"])
        if "failure" in result:
            table.add({**cells, "status": "failed", "error": result["failure"]["error"]})
            continue
        row = ComparisonRow(**result["row"])
        for entry in row.entries:
            cells[f"n2:{entry.label}"] = entry.n2
            cells[f"g2_zero:{entry.label}"] = entry.g2_zero
            cells[f"valid:{entry.label}"] = entry.valid
            cells[f"error:{entry.label}"] = entry.failure.error if entry.failure else None
        for pair in pairs:
            cells[f"dev:{pair}"] = row.deviations.get(pair)
        for label in trends:
            cells[f"approaches:{label}"] = row.flags.get(f"approaches:{label}")
        cells["status"] = "ok"
        table.add(cells)
    return table, 0


def cmd_regime_map(config: RunConfig, settings: SolverSettings,
                   dispatcher: SweepDispatcher) -> Tuple[Table, int]:
    """Valid-method labels on a (U, J) grid at fixed drive."""
    scale = config.gamma if config.gamma is not None else 1.0
    grid = RegimeGrid(
        omega_over_gamma=config.base.get("omega", 0.0) / scale,
        u_values=[v / scale for v in config.axis_values("u")],
        j_values=[v / scale for v in config.axis_values("j")],
    )
    cells = regime_map(grid, config.thresholds(settings), settings, mapper=dispatcher.mapper())
    table = Table(["u_over_gamma", "j_over_gamma", "labels"])
    for cell in cells:
        table.add({"u_over_gamma": cell.u_over_gamma, "j_over_gamma": cell.j_over_gamma,
                   "labels": cell.label_string})
    return table, 0


COMMANDS: Dict[str, Callable[[RunConfig, SolverSettings, SweepDispatcher], Tuple[Table, int]]] = {
    "steady": cmd_steady,
    "g2tau": cmd_g2tau,
    "compare": cmd_compare,
    "regime-map": cmd_regime_map,
}


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file with defaults and per-command sections")
    parser.add_argument("--log-level", dest="log_level", help="Log level (default: WARNING)")
    parser.add_argument("--log-file", dest="log_file", help="Also write logs to this file")
    for name in PARAM_NAMES:
        parser.add_argument(f"--{name}", type=float, help=f"{name} in units of gamma")
        parser.add_argument(f"--{name}-sweep", dest=f"{name}_sweep", metavar="MIN:MAX:COUNT[:log]",
                            help=f"Sweep {name} over a linear or log grid")
    parser.add_argument("--gamma", type=float,
                        help="Absolute decay rate; rates are then read in absolute units")
    parser.add_argument("--backend", help="exact | bogoliubov | pmf | linear (comma-separated for compare)")
    parser.add_argument("--cutoff", type=int, help="Fock cutoff per site (default: 5)")
    parser.add_argument("--format", choices=["csv", "json"], help="Output format (default: csv)")
    parser.add_argument("--out", help="Write the table to this file instead of stdout")
    parser.add_argument("--workers", type=int, help="Worker processes (default: 1)")
    parser.add_argument("--keep-going", dest="keep_going", action="store_true", default=None,
                        help="Record failed rows and continue")
    parser.add_argument("--force", action="store_true", default=None,
                        help="Override the Liouvillian size budget")
    parser.add_argument("--no-convergence-check", dest="convergence_check", action="store_false",
                        default=None, help="Skip the exact-backend solve at cutoff - 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Three-cavity Josephson interferometer simulations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    steady = subparsers.add_parser("steady", help="Steady-state n2 and g2(0) over a grid")
    _add_common_arguments(steady)

    g2tau = subparsers.add_parser("g2tau", help="g2(tau) from the exact backend")
    _add_common_arguments(g2tau)
    g2tau.add_argument("--taus", help="Comma-separated delays in units of 1/gamma")
    g2tau.add_argument("--tau-sweep", dest="tau_sweep", metavar="MIN:MAX:COUNT",
                       help="Linear delay grid")

    compare = subparsers.add_parser("compare", help="Cross-method comparison")
    _add_common_arguments(compare)
    compare.add_argument("--cutoffs", help="Comma-separated exact-backend cutoffs, e.g. 3,4,5")

    regime = subparsers.add_parser("regime-map", help="Valid-method labels on a (U, J) grid")
    _add_common_arguments(regime)
    regime.add_argument("--validity-ratio", dest="validity_ratio", type=float,
                        help="Bogoliubov fluctuation/background bound (default: 0.1)")
    regime.add_argument("--agreement-tol", dest="agreement_tol", type=float,
                        help="Relative n2 agreement for cross-checks (default: 0.05)")
    regime.add_argument("--exact-max-cutoff", dest="exact_max_cutoff", type=int,
                        help="Largest cutoff the exact backend is trusted with (default: 8)")
    regime.add_argument("--pmf-j-bound", dest="pmf_j_bound", type=float,
                        help="PMF small-J bound in units of gamma (default: 0.5)")
    regime.add_argument("--pmf-u-floor", dest="pmf_u_floor", type=float,
                        help="PMF minimum U in units of gamma (default: 1.0)")

    selftest = subparsers.add_parser("selftest", help="Run the built-in invariant checks")
    selftest.add_argument("--log-level", dest="log_level", help="Log level (default: WARNING)")
    selftest.add_argument("--log-file", dest="log_file", help="Also write logs to this file")
    selftest.add_argument("--config", help="YAML config file (solver section is used)")
    return parser


def run(argv: Optional[List[str]] = None, stdout=None) -> int:
    """Parse arguments, run one subcommand and return the process exit code."""
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    cli = {k: v for k, v in vars(args).items() if k != "command"}
    overrides = {"convergence_check": getattr(args, "convergence_check", None)}

    try:
        file_config = load_yaml_config(args.config) if args.config else {}
        settings = solver_settings_from(file_config, **overrides)
        solver = dict(file_config.get("solver") or {})
        solver.update({k: v for k, v in overrides.items() if v is not None})
    except InterferometerError as e:
        setup_logging(args.log_level or "WARNING", args.log_file, "sweeper")
        logger.error("Configuration error", **e.to_dict())
        return exit_code_for(e)

    log_level = args.log_level or settings.log_level
    log_file = args.log_file or settings.log_file
    setup_logging(log_level, log_file, "sweeper")

    if args.command == "selftest":
        return run_selftest(settings, stdout)

    try:
        section = section_values(file_config, args.command)
        config = build_run_config(args.command, cli, section, solver)
        dispatcher = SweepDispatcher(config.workers, log_level, log_file)
        table, code = COMMANDS[args.command](config, settings, dispatcher)
    except RowFailure as e:
        logger.error("Grid point failed; rerun with --keep-going to record failures", **e.failure)
        return e.code
    except InterferometerError as e:
        logger.error("Command failed", command=args.command, **e.to_dict())
        return exit_code_for(e)
    except Exception as e:
        logger.error("Unexpected failure", command=args.command, error=str(e), exc_info=True)
        return exit_code_for(e)

    write_table(render(table, config.output_format, args.command, config.hash_payload()),
                config.out, stdout)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
