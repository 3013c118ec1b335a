from __future__ import annotations

import json
import math
from pathlib import Path
from types import SimpleNamespace

import pandas as pd
import pytest

import lingrowth.ensemble as ensemble
from lingrowth.config import RunConfig, parse_config
from lingrowth.seeds import derive_seed

GOLDEN_DIR = Path(__file__).resolve().parent / "fixtures" / "golden"


def _config(runs: int = 4, **options: object) -> RunConfig:
    return parse_config(
        json.dumps(
            {
                "model": {"type": "bcpp", "d": 1, "lambda": 1.0},
                "run": {
                    "t_max": 3.0,
                    "seed": 2024,
                    "runs": runs,
                    "sample": {"dt": 1.0},
                },
                "options": options,
            }
        )
    )


def test_trajectory_frame_columns_and_survival_flag() -> None:
    """CSV columns follow the documented order and survived is 0/1."""

    record = ensemble.simulate_once(_config(runs=1), 5)
    frame = ensemble.trajectory_frame(record, 7)
    assert tuple(frame.columns) == ensemble.CSV_COLUMNS
    assert list(frame["time"]) == [0.0, 1.0, 2.0, 3.0]
    assert set(frame["run_id"]) == {7}
    expected = [int(row.active_sites > 0) for row in record.rows]
    assert list(frame["survived"]) == expected


def test_csv_header_matches_golden(tmp_path: Path) -> None:
    record = ensemble.simulate_once(_config(runs=1), 1)
    target = tmp_path / "trajectory.csv"
    ensemble.OutputWriter().csv(target, ensemble.trajectory_frame(record, 0))
    header = target.read_text(encoding="utf-8").splitlines()[0] + "\n"
    assert header == (GOLDEN_DIR / "trajectory_header.csv").read_text(encoding="utf-8")


def test_csv_round_trip_is_exact(tmp_path: Path) -> None:
    """Writing with %.17g and reading with round_trip loses nothing."""

    records = ensemble.run_many(_config(runs=3), workers=1)
    frame = ensemble.ensemble_frame(records)
    target = tmp_path / "nested" / "ensemble.csv"
    ensemble.OutputWriter().csv(target, frame)
    back = ensemble.read_trajectory_csv(target)
    pd.testing.assert_frame_equal(back, frame, check_dtype=False)
    assert not (tmp_path / "nested" / "ensemble.csv.tmp").exists()


def test_run_many_uses_derived_seeds() -> None:
    config = _config(runs=3)
    records = ensemble.run_many(config, workers=1)
    assert [r.seed for r in records] == [derive_seed(2024, i) for i in range(3)]


def test_parallel_ensemble_matches_serial() -> None:
    """Worker count never changes the merged rows or the summary."""

    config = _config(runs=6)
    serial = ensemble.run_many(config, workers=1)
    parallel = ensemble.run_many(config, workers=2)
    serial_frame = ensemble.ensemble_frame(serial)
    pd.testing.assert_frame_equal(serial_frame, ensemble.ensemble_frame(parallel))
    first = ensemble.summarize(serial_frame, serial, master_seed=2024)
    second = ensemble.summarize(
        ensemble.ensemble_frame(parallel), parallel, master_seed=2024
    )
    assert first.to_dict() == second.to_dict()


def _hand_frame() -> pd.DataFrame:
    rows = [
        (0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1, 1),
        (0, 1.0, 1.0, math.log(2.0), 0.5, 0.5, 0.75, 2, 1),
        (1, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1, 1),
        (1, 1.0, -math.inf, -math.inf, 0.0, 0.0, 0.4, 0, 0),
    ]
    return pd.DataFrame(rows, columns=list(ensemble.CSV_COLUMNS))


def test_summarize_hand_computed_values() -> None:
    records = [SimpleNamespace(survived=True), SimpleNamespace(survived=False)]
    summary = ensemble.summarize(_hand_frame(), records, master_seed=3)
    start = summary.at(0.0)
    assert start.mean_normalized_mass == 1.0
    assert start.se_normalized_mass == 0.0
    assert start.growth_rate_quantiles is None
    end = summary.at(1.0)
    assert end.runs == 2
    # normalized masses 2 and 0
    assert end.mean_normalized_mass == pytest.approx(1.0)
    assert end.se_normalized_mass == pytest.approx(1.0)
    assert end.alive_fraction == 0.5
    assert end.survivors == 1
    assert end.mean_integrated_overlap_survivors == pytest.approx(0.75)
    assert end.growth_rate_quantiles == {
        q: pytest.approx(math.log(2.0)) for q in ensemble.GROWTH_QUANTILES
    }
    with pytest.raises(KeyError):
        summary.at(0.5)


def test_summary_without_survivors_omits_survivor_fields() -> None:
    frame = _hand_frame()
    frame = frame[frame["run_id"] == 1].reset_index(drop=True)
    records = [SimpleNamespace(survived=False), SimpleNamespace(survived=False)]
    summary = ensemble.summarize(frame, records, master_seed=0)
    row = summary.to_dict()["rows"][1]
    assert "mean_integrated_overlap_survivors" not in row
    assert "growth_rate_quantiles" not in row
    assert row["alive_fraction"] == 0.0


def test_json_number_encodes_non_finite_values() -> None:
    assert ensemble.json_number(-math.inf) == "-inf"
    assert ensemble.json_number(math.inf) == "inf"
    assert ensemble.json_number(math.nan) == "nan"
    assert ensemble.json_number(None) is None
    assert ensemble.json_number(1.5) == 1.5


def test_gnuplot_script_references_columns(tmp_path: Path) -> None:
    script = ensemble.gnuplot_script(tmp_path / "out.csv", title="demo")
    assert script.startswith("# demo\n")
    assert "using 2:6" in script
    assert "using 2:4" in script


def test_discard_removes_written_files(
    tmp_path: Path, caplog: pytest.LogCaptureFixture
) -> None:
    writer = ensemble.OutputWriter()
    writer.json(tmp_path / "report.json", {"a": 1})
    writer.text(tmp_path / "plot.gp", "plot 1\n")
    assert json.loads((tmp_path / "report.json").read_text()) == {"a": 1}
    writer.discard()
    assert not (tmp_path / "report.json").exists()
    assert not (tmp_path / "plot.gp").exists()
    assert "removed partial output" in caplog.text
    assert writer.written == []


def test_publish_failure_raises_os_error(tmp_path: Path) -> None:
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    with pytest.raises(OSError):
        ensemble.OutputWriter().text(blocker / "child.txt", "data")


def test_dual_process_runs_through_simulate_once() -> None:
    record = ensemble.simulate_once(_config(runs=1, process="dual"), 3)
    assert len(record.rows) == 4
    assert record.rows[0].log_mass == 0.0


def test_snapshot_audit_on_live_densities() -> None:
    """Every sampled density of a BCPP(1, 1) ensemble satisfies the drift bound."""

    config = _config(runs=20, snapshots=True)
    records = ensemble.run_many(config)
    densities = ensemble.snapshot_densities(records)
    assert densities
    assert len(densities) <= sum(len(record.snapshots) for record in records)

    result = ensemble.audit_snapshots(config, records)
    assert result.densities == len(densities)
    assert result.witness_n == 2
    assert result.audit is not None
    assert len(result.audit.records) == len(densities)
    assert result.audit.violations == 0

    payload = json.loads(json.dumps(result.to_dict()))
    assert payload["witness_n"] == 2
    assert payload["audited"] == len(densities)
    assert payload["violations"] == 0
    assert "note" not in payload


def test_snapshot_audit_skips_dual_process() -> None:
    config = _config(runs=2, process="dual", snapshots=True)
    records = ensemble.run_many(config)
    result = ensemble.audit_snapshots(config, records)
    assert result.audit is None
    assert result.note == "dual densities are not audited"
    assert result.to_dict()["witness_n"] is None
