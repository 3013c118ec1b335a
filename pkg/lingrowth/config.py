"""Run configuration and numerical policy loading."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError
from .kernel import KernelDistribution, kernel_from_spec

_POLICY_PATH = Path(__file__).resolve().parent / "policies" / "numerics.yaml"
DEFAULT_SAMPLE_COUNT = 50
MAX_SEED = 2**64 - 1
PROCESSES = ("primal", "dual")


def _policy_path() -> Path:
    override = os.getenv("LINGROWTH_NUMERICS_FILE")
    if override:
        return Path(override).expanduser()
    return _POLICY_PATH


def load_numerics_policy(path: str | Path | None = None) -> dict[str, Any]:
    """Return the numerical policy as a mapping."""

    location = Path(path) if path is not None else _policy_path()
    data = yaml.safe_load(location.read_text(encoding="utf-8"))
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ValueError("Numerics policy must be a mapping")
    return dict(data)


@lru_cache(maxsize=8)
def _cached_policy(path: str) -> dict[str, Any]:
    return load_numerics_policy(path)


def numerics_setting(section: str, key: str) -> Any:
    """Return ``numerics.<section>.<key>`` from the active policy file."""

    location = _policy_path()
    policy = _cached_policy(str(location))
    numerics = policy.get("numerics")
    block = numerics.get(section) if isinstance(numerics, Mapping) else None
    if not isinstance(block, Mapping) or key not in block:
        raise ConfigError(
            f"/numerics/{section}/{key}", f"missing from numerics policy {location}"
        )
    return block[key]


@dataclass(frozen=True)
class SampleSettings:
    times: tuple[float, ...] | None = None
    dt: float | None = None


@dataclass(frozen=True)
class RunSettings:
    t_max: float
    max_events: int | None = None
    sample: SampleSettings = field(default_factory=SampleSettings)
    seed: int = 0
    runs: int = 1

    def sample_times(self) -> list[float]:
        """Return the sorted sample schedule (``t_max / 50`` spacing by default)."""

        if self.sample.times is not None:
            return sorted(self.sample.times)
        dt = self.sample.dt
        if dt is None:
            dt = self.t_max / DEFAULT_SAMPLE_COUNT
        if self.t_max == 0.0 or dt <= 0.0:
            return [0.0] if self.t_max == 0.0 else [0.0, self.t_max]
        count = int(math.floor(self.t_max / dt + 1e-9))
        times = [i * dt for i in range(count + 1)]
        if times[-1] < self.t_max - 1e-12 * max(1.0, self.t_max):
            times.append(self.t_max)
        else:
            times[-1] = self.t_max
        return times


@dataclass(frozen=True)
class OutputSettings:
    csv_path: Path | None = None
    report_path: Path | None = None
    plot_path: Path | None = None


@dataclass(frozen=True)
class RunOptions:
    prune_threshold: float | None = None
    workers: int = 1
    renormalize_every: int | None = None
    snapshots: bool = False
    process: str = "primal"


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration."""

    model: KernelDistribution
    model_spec: Mapping[str, Any]
    run: RunSettings
    output: OutputSettings = field(default_factory=OutputSettings)
    options: RunOptions = field(default_factory=RunOptions)

    def with_seed(self, seed: int) -> "RunConfig":
        _check_seed(seed, "/run/seed")
        return replace(self, run=replace(self.run, seed=seed))


def _check_seed(seed: Any, pointer: str) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(pointer, "seed must be an integer")
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError(pointer, "seed must be an unsigned 64-bit integer")
    return seed


def _number(
    block: Mapping[str, Any], key: str, pointer: str, default: Any = ...
) -> Any:
    if key not in block:
        if default is ...:
            raise ConfigError(f"{pointer}/{key}", "required field is missing")
        return default
    value = block[key]
    if value is None and default is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{pointer}/{key}", "expected a number")
    if not math.isfinite(value):
        raise ConfigError(f"{pointer}/{key}", "expected a finite number")
    return value


def _integer(block: Mapping[str, Any], key: str, pointer: str, default: Any) -> Any:
    value = _number(block, key, pointer, default)
    if value is not None and not isinstance(value, int):
        raise ConfigError(f"{pointer}/{key}", "expected an integer")
    return value


def _object(data: Mapping[str, Any], key: str, pointer: str, required: bool) -> Mapping:
    if key not in data:
        if required:
            raise ConfigError(f"{pointer}/{key}", "required field is missing")
        return {}
    value = data[key]
    if not isinstance(value, Mapping):
        raise ConfigError(f"{pointer}/{key}", "expected an object")
    return value


def _path(block: Mapping[str, Any], key: str, pointer: str) -> Path | None:
    value = block.get(key)
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{pointer}/{key}", "expected a path string")
    return Path(value).expanduser()


def _parse_sample(block: Mapping[str, Any], t_max: float) -> SampleSettings:
    pointer = "/run/sample"
    if "times" in block and "dt" in block:
        raise ConfigError(pointer, "give either times or dt, not both")
    if "times" in block:
        raw = block["times"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{pointer}/times", "expected a nonempty list")
        times = []
        for index, value in enumerate(raw):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{pointer}/times/{index}", "expected a number")
            if not 0.0 <= value <= t_max:
                raise ConfigError(
                    f"{pointer}/times/{index}", f"sample time must lie in [0, {t_max}]"
                )
            times.append(float(value))
        return SampleSettings(times=tuple(sorted(times)))
    dt = _number(block, "dt", pointer, None)
    if dt is not None and dt <= 0:
        raise ConfigError(f"{pointer}/dt", "dt must be positive")
    return SampleSettings(dt=None if dt is None else float(dt))


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Schema problems raise :class:`ConfigError` carrying a JSON pointer; kernel
    laws that fail their standing assumptions raise
    :class:`~lingrowth.errors.AssumptionError`.
    """

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("/", f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    if not isinstance(data, Mapping):
        raise ConfigError("/", "configuration must be a JSON object")

    model_spec = _object(data, "model", "", required=True)
    run_block = _object(data, "run", "", required=True)
    output_block = _object(data, "output", "", required=False)
    options_block = _object(data, "options", "", required=False)

    t_max = float(_number(run_block, "t_max", "/run"))
    if t_max < 0:
        raise ConfigError("/run/t_max", "t_max must be nonnegative")
    max_events = _integer(run_block, "max_events", "/run", None)
    if max_events is not None and max_events < 1:
        raise ConfigError("/run/max_events", "max_events must be positive")
    runs = _integer(run_block, "runs", "/run", 1)
    if runs < 1:
        raise ConfigError("/run/runs", "runs must be at least 1")
    seed = _check_seed(run_block.get("seed", 0), "/run/seed")
    sample = _parse_sample(_object(run_block, "sample", "/run", required=False), t_max)

    prune = _number(options_block, "prune_threshold", "/options", None)
    if prune is not None and prune < 0:
        raise ConfigError("/options/prune_threshold", "prune threshold must be >= 0")
    workers = _integer(options_block, "workers", "/options", 1)
    if workers < 1:
        raise ConfigError("/options/workers", "workers must be at least 1")
    renormalize_every = _integer(options_block, "renormalize_every", "/options", None)
    if renormalize_every is not None and renormalize_every < 1:
        raise ConfigError("/options/renormalize_every", "must be at least 1")
    snapshots = options_block.get("snapshots", False)
    if not isinstance(snapshots, bool):
        raise ConfigError("/options/snapshots", "expected a boolean")
    process = options_block.get("process", "primal")
    if process not in PROCESSES:
        raise ConfigError("/options/process", f"expected one of {PROCESSES}")

    model = kernel_from_spec(model_spec, pointer="/model")
    return RunConfig(
        model=model,
        model_spec=dict(model_spec),
        run=RunSettings(
            t_max=t_max,
            max_events=max_events,
            sample=sample,
            seed=seed,
            runs=runs,
        ),
        output=OutputSettings(
            csv_path=_path(output_block, "csv_path", "/output"),
            report_path=_path(output_block, "report_path", "/output"),
            plot_path=_path(output_block, "plot_path", "/output"),
        ),
        options=RunOptions(
            prune_threshold=None if prune is None else float(prune),
            workers=workers,
            renormalize_every=renormalize_every,
            snapshots=snapshots,
            process=process,
        ),
    )


def load_run_config(path: str | Path) -> RunConfig:
    """Read and parse the run configuration at ``path``."""

    location = Path(path).expanduser()
    text = location.read_text(encoding="utf-8")
    return parse_config(text)


__all__ = [
    "RunConfig",
    "RunSettings",
    "SampleSettings",
    "OutputSettings",
    "RunOptions",
    "parse_config",
    "load_run_config",
    "load_numerics_policy",
    "numerics_setting",
]
