"""Scenario configuration files (TOML) with strict key checking."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .grid import RadialGrid

TOP_LEVEL_KEYS = {"scenario", "seed", "output_dir", "potential", "grid", "params", "tolerances"}
GRID_KEYS = {"r_min", "r_max", "n_points"}


@dataclass
class ScenarioConfig:
    """One scenario run.

    ``params`` and ``tolerances`` are checked against the scenario's declared
    defaults, so a misspelled key is an error rather than silently ignored.
    """

    scenario: str
    seed: int = 0
    output_dir: str = "lab-out"
    potential: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    source: str | None = None

    def grid_object(self, default: RadialGrid | None = None) -> RadialGrid:
        base = default or RadialGrid()
        values = {"r_min": base.r_min, "r_max": base.r_max, "n_points": base.n_points}
        values.update(self.grid)
        try:
            return RadialGrid(float(values["r_min"]), float(values["r_max"]),
                              int(values["n_points"]))
        except Exception as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get("LAB_OUT_DIR") or self.output_dir)

    def echo(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "potential": self.potential,
                "grid": self.grid, "params": self.params, "tolerances": self.tolerances}


def config_from_dict(data: dict, source: str | None = None) -> ScenarioConfig:
    unknown = set(data) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "scenario" not in data:
        raise ConfigError("missing required key 'scenario'")
    for key in ("potential", "grid", "params", "tolerances"):
        if key in data and not isinstance(data[key], dict):
            raise ConfigError(f"'{key}' must be a table")
    grid = dict(data.get("grid", {}))
    bad = set(grid) - GRID_KEYS
    if bad:
        raise ConfigError(f"unknown grid keys: {sorted(bad)}")
    tolerances = dict(data.get("tolerances", {}))
    for key, val in tolerances.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
            raise ConfigError(f"tolerance {key!r} must be a positive number, got {val!r}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    return ScenarioConfig(
        scenario=str(data["scenario"]), seed=seed,
        output_dir=str(data.get("output_dir", "lab-out")),
        potential=dict(data.get("potential", {})), grid=grid,
        params=dict(data.get("params", {})), tolerances=tolerances, source=source,
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, str(path))
