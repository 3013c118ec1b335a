from __future__ import annotations

import json
from pathlib import Path

import pytest

import lingrowth.config as config
from lingrowth.errors import AssumptionError, ConfigError


def _config_text(**overrides: object) -> str:
    data: dict[str, object] = {
        "model": {"type": "bcpp", "d": 1, "lambda": 1.0},
        "run": {"t_max": 10.0, "seed": 5},
    }
    data.update(overrides)
    return json.dumps(data)


def test_parse_config_defaults() -> None:
    """Optional blocks should fall back to their documented defaults."""

    cfg = config.parse_config(_config_text())
    assert cfg.run.t_max == 10.0
    assert cfg.run.seed == 5
    assert cfg.run.runs == 1
    assert cfg.run.max_events is None
    assert cfg.output.csv_path is None
    assert cfg.options.workers == 1
    assert cfg.options.process == "primal"
    assert cfg.model.family == "bcpp"
    times = cfg.run.sample_times()
    assert len(times) == config.DEFAULT_SAMPLE_COUNT + 1
    assert times[0] == 0.0
    assert times[-1] == 10.0


def test_sample_dt_appends_horizon() -> None:
    """A spacing that does not divide t_max still ends at t_max."""

    text = _config_text(run={"t_max": 1.0, "sample": {"dt": 0.3}})
    assert config.parse_config(text).run.sample_times() == pytest.approx(
        [0.0, 0.3, 0.6, 0.9, 1.0]
    )


def test_explicit_times_are_sorted() -> None:
    text = _config_text(run={"t_max": 2.0, "sample": {"times": [2, 0.5, 1]}})
    assert config.parse_config(text).run.sample_times() == [0.5, 1.0, 2.0]


def test_zero_horizon_samples_only_the_start() -> None:
    text = _config_text(run={"t_max": 0})
    assert config.parse_config(text).run.sample_times() == [0.0]


@pytest.mark.parametrize(
    ("overrides", "pointer"),
    [
        ({"run": {"t_max": -1.0}}, "/run/t_max"),
        ({"run": {}}, "/run/t_max"),
        ({"run": {"t_max": 1.0, "seed": -3}}, "/run/seed"),
        ({"run": {"t_max": 1.0, "seed": 2**64}}, "/run/seed"),
        ({"run": {"t_max": 1.0, "seed": True}}, "/run/seed"),
        ({"run": {"t_max": 1.0, "runs": 0}}, "/run/runs"),
        ({"run": {"t_max": 1.0, "sample": {"times": [2.0]}}}, "/run/sample/times/0"),
        ({"run": {"t_max": 1.0, "sample": {"dt": 0}}}, "/run/sample/dt"),
        (
            {"run": {"t_max": 1.0, "sample": {"dt": 0.1, "times": [0.0]}}},
            "/run/sample",
        ),
        ({"options": {"workers": 0}}, "/options/workers"),
        ({"options": {"process": "sideways"}}, "/options/process"),
        ({"options": {"snapshots": "yes"}}, "/options/snapshots"),
        ({"output": {"csv_path": 3}}, "/output/csv_path"),
        ({"model": {"type": "bcpp", "d": 1}}, "/model/lambda"),
        ({"output": []}, "/output"),
    ],
)
def test_invalid_fields_carry_pointer(overrides: dict, pointer: str) -> None:
    """Every schema violation names the offending field."""

    with pytest.raises(ConfigError) as excinfo:
        config.parse_config(_config_text(**overrides))
    assert excinfo.value.pointer == pointer


def test_invalid_json_is_a_config_error() -> None:
    with pytest.raises(ConfigError) as excinfo:
        config.parse_config("{not json")
    assert excinfo.value.pointer == "/"
    with pytest.raises(ConfigError):
        config.parse_config("[1, 2]")


def test_kernel_assumptions_are_enforced() -> None:
    """A custom law supported on a line does not span Z^2."""

    model = {
        "type": "custom",
        "d": 2,
        "atoms": [
            {"prob": 0.5, "vector": [[[1, 0], 2.0]]},
            {"prob": 0.5, "vector": []},
        ],
    }
    with pytest.raises(AssumptionError, match="spanning_support"):
        config.parse_config(_config_text(model=model))


def test_with_seed_replaces_seed_only() -> None:
    cfg = config.parse_config(_config_text())
    other = cfg.with_seed(99)
    assert other.run.seed == 99
    assert other.run.t_max == cfg.run.t_max
    assert cfg.run.seed == 5
    with pytest.raises(ConfigError):
        cfg.with_seed(-1)


def test_load_run_config_reads_file(tmp_path: Path) -> None:
    path = tmp_path / "run.json"
    path.write_text(
        _config_text(output={"csv_path": str(tmp_path / "out.csv")}), encoding="utf-8"
    )
    cfg = config.load_run_config(path)
    assert cfg.output.csv_path == tmp_path / "out.csv"


def test_numerics_policy_ships_with_package() -> None:
    """The bundled policy should define the engine and quadrature defaults."""

    assert config.numerics_setting("engine", "renormalize_every") == 256
    assert config.numerics_setting("phase", "inconclusive_margin") == pytest.approx(
        1e-3
    )


def test_numerics_policy_env_override(
    monkeypatch: pytest.MonkeyPatch, tmp_path: Path
) -> None:
    """LINGROWTH_NUMERICS_FILE should point the loader at another policy."""

    policy = tmp_path / "numerics.yaml"
    policy.write_text(
        "numerics:\n  engine:\n    renormalize_every: 7\n", encoding="utf-8"
    )
    monkeypatch.setenv("LINGROWTH_NUMERICS_FILE", str(policy))
    assert config.numerics_setting("engine", "renormalize_every") == 7
    with pytest.raises(ConfigError) as excinfo:
        config.numerics_setting("engine", "time_above_level")
    assert excinfo.value.pointer == "/numerics/engine/time_above_level"


def test_numerics_policy_must_be_a_mapping(tmp_path: Path) -> None:
    path = tmp_path / "bad.yaml"
    path.write_text("- just\n- a list\n", encoding="utf-8")
    with pytest.raises(ValueError, match="mapping"):
        config.load_numerics_policy(path)
    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert config.load_numerics_policy(empty) == {}
