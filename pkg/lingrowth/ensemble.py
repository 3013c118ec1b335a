"""Trajectory output, seeded ensembles and their aggregate summary.

Run ``i`` of an ensemble with master seed ``s`` uses ``derive_seed(s, i)``,
so each run is reproducible on its own and ensembles can be extended
without replaying earlier runs. Results are merged by run index before any
aggregation, which makes every summary independent of worker scheduling.
"""

from __future__ import annotations

import concurrent.futures
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import pandas as pd

from . import theory
from .analysis import DriftAudit, audit_drift
from .config import RunConfig, numerics_setting
from .engine import TrajectoryRecord, run, run_dual
from .lattice import MassField
from .seeds import derive_seed

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "run_id",
    "time",
    "log_mass",
    "log_normalized_mass",
    "rho_star",
    "overlap",
    "integrated_overlap",
    "active_sites",
    "survived",
)
FLOAT_FORMAT = "%.17g"
GROWTH_QUANTILES = (0.1, 0.5, 0.9)


def simulate_once(config: RunConfig, seed: int) -> TrajectoryRecord:
    """Run one trajectory of ``config`` with the given stream seed."""

    options = config.options
    settings = config.run
    common = dict(
        max_events=settings.max_events,
        renormalize_every=options.renormalize_every,
        snapshots=options.snapshots,
    )
    if options.process == "dual":
        return run_dual(
            config.model, settings.t_max, settings.sample_times(), seed, **common
        )
    return run(
        config.model,
        settings.t_max,
        settings.sample_times(),
        seed,
        prune_threshold=options.prune_threshold,
        **common,
    )


def trajectory_frame(record: TrajectoryRecord, run_id: int) -> pd.DataFrame:
    """Return the CSV rows of one trajectory as a DataFrame."""

    rows = [
        {
            "run_id": run_id,
            "time": row.time,
            "log_mass": row.log_mass,
            "log_normalized_mass": row.log_normalized_mass,
            "rho_star": row.rho_star,
            "overlap": row.overlap,
            "integrated_overlap": row.integrated_overlap,
            "active_sites": row.active_sites,
            "survived": int(row.active_sites > 0),
        }
        for row in record.rows
    ]
    return pd.DataFrame(rows, columns=list(CSV_COLUMNS))


def _run_indexed(config: RunConfig, index: int) -> tuple[int, TrajectoryRecord]:
    seed = derive_seed(config.run.seed, index)
    logger.debug("run %d: seed %d", index, seed)
    return index, simulate_once(config, seed)


def run_many(
    config: RunConfig, *, runs: int | None = None, workers: int | None = None
) -> list[TrajectoryRecord]:
    """Run ``runs`` seeded trajectories and return them ordered by run index.

    ``workers > 1`` distributes runs over a process pool; the first failing
    run cancels the remaining ones and re-raises.
    """

    runs = config.run.runs if runs is None else runs
    workers = config.options.workers if workers is None else workers
    results: dict[int, TrajectoryRecord] = {}
    if workers <= 1 or runs <= 1:
        for index in range(runs):
            _, record = _run_indexed(config, index)
            results[index] = record
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_run_indexed, config, index) for index in range(runs)
            ]
            try:
                for future in concurrent.futures.as_completed(futures):
                    index, record = future.result()
                    results[index] = record
            except BaseException:
                for future in futures:
                    future.cancel()
                raise
    logger.info("completed %d runs with %d worker(s)", runs, max(1, workers))
    return [results[index] for index in range(runs)]


def ensemble_frame(records: Sequence[TrajectoryRecord]) -> pd.DataFrame:
    """Return every run's rows, sorted by ``(run_id, time)``."""

    frames = [trajectory_frame(record, index) for index, record in enumerate(records)]
    if not frames:
        return pd.DataFrame(columns=list(CSV_COLUMNS))
    frame = pd.concat(frames, ignore_index=True)
    return frame.sort_values(["run_id", "time"], kind="mergesort").reset_index(
        drop=True
    )


@dataclass(frozen=True)
class SummaryRow:
    time: float
    runs: int
    mean_normalized_mass: float
    se_normalized_mass: float
    alive_fraction: float
    survivors: int
    mean_integrated_overlap_survivors: float | None = None
    growth_rate_quantiles: dict[float, float] | None = None


@dataclass(frozen=True)
class EnsembleSummary:
    master_seed: int
    runs: int
    process: str
    rows: tuple[SummaryRow, ...] = field(default_factory=tuple)

    def at(self, time: float) -> SummaryRow:
        for row in self.rows:
            if math.isclose(row.time, time, rel_tol=1e-12, abs_tol=1e-12):
                return row
        raise KeyError(time)

    def to_dict(self) -> dict[str, Any]:
        return {
            "master_seed": self.master_seed,
            "runs": self.runs,
            "process": self.process,
            "rows": [_row_dict(row) for row in self.rows],
        }


def json_number(value: float | None) -> Any:
    if value is None:
        return None
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _row_dict(row: SummaryRow) -> dict[str, Any]:
    data: dict[str, Any] = {
        "time": json_number(row.time),
        "runs": row.runs,
        "mean_normalized_mass": json_number(row.mean_normalized_mass),
        "se_normalized_mass": json_number(row.se_normalized_mass),
        "alive_fraction": json_number(row.alive_fraction),
        "survivors": row.survivors,
    }
    if row.mean_integrated_overlap_survivors is not None:
        data["mean_integrated_overlap_survivors"] = json_number(
            row.mean_integrated_overlap_survivors
        )
    if row.growth_rate_quantiles is not None:
        data["growth_rate_quantiles"] = {
            f"{q:g}": json_number(v) for q, v in row.growth_rate_quantiles.items()
        }
    return data


def summarize(
    frame: pd.DataFrame,
    records: Sequence[TrajectoryRecord],
    *,
    master_seed: int,
    process: str = "primal",
    quantiles: Iterable[float] = GROWTH_QUANTILES,
) -> EnsembleSummary:
    """Aggregate per-run rows into per-sample-time statistics.

    The normalized mass ``e^{-(|k|-1)t}|eta_t|`` is zero for extinct runs.
    Survivor statistics use the runs that survive to their last sample and
    are absent when there are none.
    """

    quantiles = tuple(quantiles)
    data = frame.copy()
    data["normalized_mass"] = data["log_normalized_mass"].map(math.exp)
    survivors_to_end = {
        index for index, record in enumerate(records) if record.survived
    }
    data["final_survivor"] = data["run_id"].isin(survivors_to_end)
    rows = []
    for time, group in data.groupby("time", sort=True):
        count = int(len(group))
        mass = group["normalized_mass"]
        se = float(mass.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        alive = group[group["survived"] == 1]
        kept = group[group["final_survivor"]]
        integrated = (
            float(kept["integrated_overlap"].mean()) if len(kept) else None
        )
        growth = None
        if time > 0.0 and len(alive):
            rates = (alive["log_normalized_mass"] / time).sort_values(kind="mergesort")
            growth = {
                q: float(rates.quantile(q, interpolation="lower")) for q in quantiles
            }
        rows.append(
            SummaryRow(
                time=float(time),
                runs=count,
                mean_normalized_mass=float(mass.mean()),
                se_normalized_mass=se,
                alive_fraction=len(alive) / count,
                survivors=int(len(alive)),
                mean_integrated_overlap_survivors=integrated,
                growth_rate_quantiles=growth,
            )
        )
    return EnsembleSummary(
        master_seed=master_seed,
        runs=len(records),
        process=process,
        rows=tuple(rows),
    )


@dataclass(frozen=True)
class SnapshotAudit:
    """Drift audit over the densities sampled from live trajectories."""

    densities: int
    witness_n: int | None = None
    audit: DriftAudit | None = None
    note: str | None = None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "densities": self.densities,
            "witness_n": self.witness_n,
        }
        if self.audit is not None:
            payload = self.audit.to_dict()
            payload["worst_margin"] = json_number(payload["worst_margin"])
            data.update(payload)
        if self.note is not None:
            data["note"] = self.note
        return data


def snapshot_densities(records: Sequence[TrajectoryRecord]) -> list[MassField]:
    """Return the non-extinct densities stored in ``records``, in run order."""

    return [rho for record in records for _, rho in record.snapshots if len(rho)]


def audit_snapshots(
    config: RunConfig,
    records: Sequence[TrajectoryRecord],
    *,
    n_max: int | None = None,
    site_limit: int | None = None,
) -> SnapshotAudit:
    """Check ``drift >= c1 R - c2 R^{3/2}`` on every sampled density.

    ``g`` is the smallest witness ``g_n`` of the model; without one the
    audit is recorded as not applicable.
    """

    dist = config.model
    densities = snapshot_densities(records)
    if config.options.process != "primal":
        return SnapshotAudit(len(densities), note="dual densities are not audited")
    if dist.d >= 3:
        statistic = theory.localization_statistic(dist)
        margin = float(numerics_setting("phase", "inconclusive_margin"))
        if theory.witness_ruled_out(dist, statistic, margin):
            return SnapshotAudit(len(densities), note="no witness g_n exists")
    witness = theory.find_witness(dist, n_max=n_max)
    if witness is None:
        return SnapshotAudit(len(densities), note="no witness found within n_max")
    audit = audit_drift(dist, witness.g, densities, site_limit=site_limit)
    if audit.violations:
        logger.warning(
            "drift audit: %d of %d densities below c1 R - c2 R^{3/2}",
            audit.violations,
            len(audit.records),
        )
    else:
        logger.info(
            "drift audit with g_%d passed on %d densities",
            witness.n,
            len(audit.records),
        )
    return SnapshotAudit(len(densities), witness_n=witness.n, audit=audit)


def gnuplot_script(csv_path: Path, *, title: str = "lingrowth") -> str:
    """Return a gnuplot script that plots the overlap and normalized mass columns."""

    time_col = CSV_COLUMNS.index("time") + 1
    overlap_col = CSV_COLUMNS.index("overlap") + 1
    mass_col = CSV_COLUMNS.index("log_normalized_mass") + 1
    return "\n".join(
        [
            f"# {title}",
            'set datafile separator ","',
            "set key autotitle columnhead",
            'set xlabel "t"',
            "set multiplot layout 2,1",
            'set ylabel "R_t"',
            f'plot "{csv_path}" using {time_col}:{overlap_col} with points pt 7 ps 0.3',
            'set ylabel "log normalized mass"',
            f'plot "{csv_path}" using {time_col}:{mass_col} with points pt 7 ps 0.3',
            "unset multiplot",
            "",
        ]
    )


class OutputWriter:
    """Publish files through temporary siblings.

    ``discard`` removes every file published so far.
    """

    def __init__(self) -> None:
        self.written: list[Path] = []

    def _publish(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_text(text, encoding="utf-8")
            tmp.replace(path)
        except OSError as exc:
            tmp.unlink(missing_ok=True)
            raise OSError(f"cannot write {path}: {exc}") from exc
        self.written.append(path)

    def csv(self, path: Path, frame: pd.DataFrame) -> None:
        self._publish(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT))

    def json(self, path: Path, payload: Any) -> None:
        self._publish(path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")

    def text(self, path: Path, text: str) -> None:
        self._publish(path, text)

    def discard(self) -> None:
        for path in self.written:
            path.unlink(missing_ok=True)
            logger.warning("removed partial output %s", path)
        self.written.clear()


def read_trajectory_csv(path: Path) -> pd.DataFrame:
    """Read a trajectory CSV written by :class:`OutputWriter`."""

    return pd.read_csv(path, float_precision="round_trip")


__all__ = [
    "CSV_COLUMNS",
    "FLOAT_FORMAT",
    "GROWTH_QUANTILES",
    "EnsembleSummary",
    "SummaryRow",
    "OutputWriter",
    "simulate_once",
    "trajectory_frame",
    "run_many",
    "ensemble_frame",
    "summarize",
    "gnuplot_script",
    "read_trajectory_csv",
    "SnapshotAudit",
    "snapshot_densities",
    "audit_snapshots",
    "json_number",
]
