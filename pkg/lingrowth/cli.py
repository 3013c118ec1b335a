"""Unified command-line interface for lingrowth."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import ensemble, identities, theory
from .config import RunConfig, load_run_config
from .errors import ConfigError, LinGrowthError
from .kernel import kernel_to_spec

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "ensemble", "phase", "identities")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IDENTITY_FAILURE = 2
EXIT_IO = 3


def _normalize_exit_code(result: object) -> int:
    """Convert a command return value into a process exit code."""

    if isinstance(result, bool):
        return int(result)
    if isinstance(result, int):
        return result
    return EXIT_OK


def configure_logging(verbosity: int) -> None:
    """Route log records through rich at WARNING, INFO (-v) or DEBUG (-vv)."""

    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _load(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _print_json(payload: Any) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def _trajectory_report(config: RunConfig, record) -> dict[str, Any]:
    final = record.final
    return {
        "model": kernel_to_spec(config.model),
        "process": config.options.process,
        "seed": record.seed,
        "stop_reason": record.stop_reason,
        "events": record.events,
        "survived": record.survived,
        "pruned": record.pruned,
        "final": {
            "time": final.time,
            "log_mass": ensemble.json_number(final.log_mass),
            "log_normalized_mass": ensemble.json_number(final.log_normalized_mass),
            "rho_star": final.rho_star,
            "overlap": final.overlap,
            "integrated_overlap": final.integrated_overlap,
            "integrated_overlap_32": final.integrated_overlap_32,
            "time_above": final.time_above,
            "active_sites": final.active_sites,
        },
    }


def _write_outputs(
    config: RunConfig,
    frame,
    report: dict[str, Any],
    *,
    title: str,
) -> None:
    writer = ensemble.OutputWriter()
    output = config.output
    try:
        if output.csv_path is not None:
            writer.csv(output.csv_path, frame)
        else:
            text = frame.to_csv(index=False, float_format=ensemble.FLOAT_FORMAT)
            sys.stdout.write(text)
        if output.report_path is not None:
            writer.json(output.report_path, report)
        if output.plot_path is not None:
            if output.csv_path is None:
                logger.warning("plot_path needs csv_path; no gnuplot script written")
            else:
                script = ensemble.gnuplot_script(output.csv_path, title=title)
                writer.text(output.plot_path, script)
    except BaseException:
        writer.discard()
        raise


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    if config.run.runs != 1:
        raise ConfigError("/run/runs", "simulate runs one trajectory; use ensemble")
    record = ensemble.simulate_once(config, config.run.seed)
    if record.pruned:
        logger.warning("prune threshold was active: the trajectory is approximate")
    if record.stop_reason != "horizon":
        logger.warning("trajectory stopped early: %s", record.stop_reason)
    frame = ensemble.trajectory_frame(record, 0)
    report = _trajectory_report(config, record)
    if config.options.snapshots:
        report["drift_audit"] = ensemble.audit_snapshots(config, [record]).to_dict()
    _write_outputs(
        config,
        frame,
        report,
        title=f"simulate seed {config.run.seed}",
    )
    return EXIT_OK


def _summary_table(summary: ensemble.EnsembleSummary) -> Table:
    table = Table(title=f"{summary.runs} runs ({summary.process})")
    columns = ("t", "mean e^{-(|k|-1)t}|eta_t|", "SE", "alive", "mean int R (surv.)")
    for column in columns:
        table.add_column(column, justify="right")
    for row in summary.rows:
        integrated = row.mean_integrated_overlap_survivors
        table.add_row(
            f"{row.time:.4g}",
            f"{row.mean_normalized_mass:.6g}",
            f"{row.se_normalized_mass:.3g}",
            f"{row.alive_fraction:.3f}",
            "-" if integrated is None else f"{integrated:.6g}",
        )
    return table


def cmd_ensemble(args: argparse.Namespace) -> int:
    config = _load(args)
    if config.run.runs < 2:
        raise ConfigError("/run/runs", "an ensemble needs at least 2 runs")
    workers = args.workers if args.workers is not None else config.options.workers
    records = ensemble.run_many(config, workers=workers)
    frame = ensemble.ensemble_frame(records)
    summary = ensemble.summarize(
        frame, records, master_seed=config.run.seed, process=config.options.process
    )
    report = {"model": kernel_to_spec(config.model), **summary.to_dict()}
    if config.options.snapshots:
        report["drift_audit"] = ensemble.audit_snapshots(config, records).to_dict()
    _write_outputs(config, frame, report, title=f"ensemble seed {config.run.seed}")
    if args.json:
        _print_json(report)
    else:
        Console(stderr=config.output.csv_path is None).print(_summary_table(summary))
    return EXIT_OK


def _phase_table(report: theory.PhaseReport) -> Table:
    table = Table(title="phase diagnostics", show_header=False)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key, value in report.to_dict().items():
        if key == "notes":
            continue
        table.add_row(key, f"{value:.10g}" if isinstance(value, float) else str(value))
    for note in report.notes:
        table.add_row("note", note)
    return table


def cmd_phase(args: argparse.Namespace) -> int:
    config = _load(args)
    report = theory.phase_report(
        config.model, method=args.method, search_witness=not args.no_witness
    )
    payload = {"model": kernel_to_spec(config.model), **report.to_dict()}
    if config.output.report_path is not None:
        writer = ensemble.OutputWriter()
        writer.json(config.output.report_path, payload)
    if args.json:
        _print_json(payload)
    else:
        Console().print(_phase_table(report))
    return EXIT_OK


def _identity_table(report: identities.IdentityReport) -> Table:
    table = Table(title="identity battery")
    table.add_column("check")
    table.add_column("status")
    table.add_column("residual", justify="right")
    table.add_column("tolerance", justify="right")
    styles = {"pass": "green", "fail": "bold red", "skipped": "yellow"}
    for check in report.checks:
        status = check.status
        table.add_row(
            check.name,
            f"[{styles[status]}]{status}[/]",
            "-" if check.skipped else f"{check.residual:.3g}",
            "-" if check.skipped else f"{check.tolerance:.1g}",
        )
    return table


def cmd_identities(args: argparse.Namespace) -> int:
    dist = None
    if args.config is not None:
        dist = load_run_config(args.config).model
    report = identities.run_identities(
        dist,
        seed=args.seed if args.seed is not None else 0,
        method=args.method,
        corrupt=args.corrupt_beta,
    )
    if args.json:
        _print_json(report.to_dict())
    else:
        console = Console()
        console.print(_identity_table(report))
        for check in report.checks:
            if check.skipped:
                console.print(f"skipped {check.name}: {check.note}")
    return EXIT_OK if report.passed else EXIT_IDENTITY_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lingrowth",
        description="Simulate and diagnose linear growth systems on Z^d",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase log verbosity (-v info, -vv debug)",
    )
    sub = parser.add_subparsers(dest="command")

    def add(name: str, handler: Callable[[argparse.Namespace], int], help_text: str):
        command = sub.add_parser(name, help=help_text)
        command.set_defaults(handler=handler)
        command.add_argument("--seed", type=int, help="Override the master seed")
        return command

    simulate = add("simulate", cmd_simulate, "Run one trajectory and write its CSV")
    simulate.add_argument("--config", required=True, type=Path)

    ens = add("ensemble", cmd_ensemble, "Run a seeded ensemble and summarize it")
    ens.add_argument("--config", required=True, type=Path)
    ens.add_argument("--workers", type=int, help="Override options.workers")
    ens.add_argument("--json", action="store_true", help="Print the summary as JSON")

    phase = add("phase", cmd_phase, "Classify the kernel law")
    phase.add_argument("--config", required=True, type=Path)
    phase.add_argument("--method", choices=theory.METHODS)
    phase.add_argument(
        "--no-witness", action="store_true", help="Skip the g_n witness search"
    )
    phase.add_argument("--json", action="store_true", help="Print the report as JSON")

    ident = add("identities", cmd_identities, "Run the identity battery")
    ident.add_argument("--config", type=Path, help="Kernel to test (default BCPP d=3)")
    ident.add_argument("--method", choices=theory.METHODS)
    ident.add_argument(
        "--corrupt-beta",
        action="store_true",
        help="Perturb beta in the U-term identity (negative control)",
    )
    ident.add_argument("--json", action="store_true", help="Print the report as JSON")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point for the unified lingrowth CLI."""

    parser = build_parser()
    try:
        args = parser.parse_args(list(sys.argv[1:]) if argv is None else list(argv))
    except SystemExit as exc:
        # usage errors are validation errors; --help exits cleanly
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_OK
    configure_logging(args.verbose)
    try:
        return _normalize_exit_code(args.handler(args))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LinGrowthError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover - CLI entry point
    raise SystemExit(main())
