"""Scenario configuration, presets, and config-file loading."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

MASK_POLICIES = ("all-masked", "none-masked")


class ConfigError(ValueError):
    """Raised when a configuration violates one of its invariants."""


@dataclass(frozen=True)
class SimConfig:
    area_width: float = 2000.0
    area_height: float = 2000.0
    population: int = 500
    initial_confirmed: int = 50
    initial_carriers: int = 10
    speed_min: float = 0.01
    speed_max: float = 20.0
    tick: float = 1.0
    horizon: float = 500.0
    proximity_threshold: float = 3.0
    contact_duration: float = 1.0
    infect_prob_mask: float = 0.3
    infect_prob_nomask: float = 0.6
    mask_policy: str = "none-masked"
    symptom_threshold: float = 0.9
    symptom_persistence: float = 60.0
    ramp_duration: float = 120.0
    distance_violation_threshold: float = 3.0
    rng_seed: int = 0
    camera_grid: tuple[int, int] = (4, 4)
    cell_grid: tuple[int, int] = (2, 2)
    miss_prob: float = 0.0
    quarantine_enabled: bool = True
    global_symptom_watch: bool = False

    def __post_init__(self):
        for name in ("camera_grid", "cell_grid"):
            value = getattr(self, name)
            if isinstance(value, str):
                value = parse_grid(value)
            object.__setattr__(self, name, tuple(int(v) for v in value))
        validate(self)

    @property
    def n_ticks(self) -> int:
        return int(round(self.horizon / self.tick))

    @property
    def masked(self) -> bool:
        return self.mask_policy == "all-masked"

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["camera_grid"] = list(self.camera_grid)
        out["cell_grid"] = list(self.cell_grid)
        return out


FIELD_NAMES = tuple(f.name for f in dataclasses.fields(SimConfig))
_DEFAULTS = {f.name: f.default for f in dataclasses.fields(SimConfig)}


def parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().replace("×", "x").split("x")
    if len(parts) != 2:
        raise ConfigError(f"grid must look like '4x4', got {text!r}")
    return int(parts[0]), int(parts[1])


def validate(cfg: SimConfig) -> None:
    def fail(msg):
        raise ConfigError(msg)

    if not (cfg.area_width > 0 and cfg.area_height > 0):
        fail("area_width and area_height must be > 0")
    if cfg.population < 0 or cfg.initial_confirmed < 0 or cfg.initial_carriers < 0:
        fail("population, initial_confirmed, initial_carriers must be >= 0")
    if not 0 < cfg.speed_min <= cfg.speed_max:
        fail("0 < speed_min <= speed_max violated")
    if not cfg.tick > 0:
        fail("tick > 0 violated")
    if cfg.horizon < 0:
        fail("horizon must be >= 0")
    ratio = cfg.horizon / cfg.tick
    if abs(ratio - round(ratio)) > 1e-9:
        fail("horizon must be a multiple of tick")
    for name in ("infect_prob_mask", "infect_prob_nomask", "miss_prob", "symptom_threshold"):
        if not 0.0 <= getattr(cfg, name) <= 1.0:
            fail(f"{name} must lie in [0, 1]")
    if cfg.infect_prob_mask > cfg.infect_prob_nomask:
        fail("infect_prob_mask <= infect_prob_nomask violated")
    if cfg.initial_confirmed + cfg.initial_carriers > cfg.population:
        fail("initial_confirmed + initial_carriers <= population violated")
    if cfg.mask_policy not in MASK_POLICIES:
        fail(f"mask_policy must be one of {MASK_POLICIES}, got {cfg.mask_policy!r}")
    for name in ("proximity_threshold", "distance_violation_threshold"):
        if getattr(cfg, name) < 0:
            fail(f"{name} must be >= 0")
    for name in ("contact_duration", "symptom_persistence", "ramp_duration"):
        if not getattr(cfg, name) > 0:
            fail(f"{name} must be > 0")
    for name in ("camera_grid", "cell_grid"):
        g = getattr(cfg, name)
        if len(g) != 2 or min(g) < 1:
            fail(f"{name} must be two positive counts")
    if not 0 <= cfg.rng_seed < 2**64:
        fail("rng_seed must be a 64-bit unsigned integer")


# Table-driven preset: short horizon, small square, slow walkers, 10-minute
# contact gate.
PAPER_TABLE = dict(
    area_width=1000.0,
    area_height=1000.0,
    population=150,
    initial_confirmed=50,
    speed_min=1.0,
    speed_max=10.0,
    horizon=300.0,
    proximity_threshold=5.0,
    distance_violation_threshold=5.0,
    contact_duration=10.0,
    infect_prob_nomask=0.6,
    infect_prob_mask=0.3,
    symptom_persistence=60.0,
    symptom_threshold=0.9,
)

# Narrative preset (default): larger area, longer observation, exposure on
# proximity alone.
PAPER_TEXT = dict(
    area_width=2000.0,
    area_height=2000.0,
    population=500,
    initial_confirmed=50,
    speed_min=0.01,
    speed_max=20.0,
    horizon=500.0,
    proximity_threshold=3.0,
    distance_violation_threshold=3.0,
    contact_duration=1.0,
    infect_prob_nomask=0.6,
    infect_prob_mask=0.3,
    symptom_persistence=60.0,
    symptom_threshold=0.9,
)

PRESETS: dict[str, Mapping[str, Any]] = {
    "paper-text": PAPER_TEXT,
    "paper-table": PAPER_TABLE,
}
DEFAULT_PRESET = "paper-text"


def coerce(name: str, value: Any) -> Any:
    """Convert a raw value (from JSON or the command line) to the field's type."""
    if name not in FIELD_NAMES:
        raise ConfigError(f"unknown config field {name!r}")
    default = _DEFAULTS[name]
    if name in ("camera_grid", "cell_grid"):
        if isinstance(value, str):
            return parse_grid(value)
        return tuple(int(v) for v in value)
    if isinstance(default, bool):
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"{name} expects a boolean, got {value!r}")
        return bool(value)
    if isinstance(default, int):
        if isinstance(value, int):
            return value
        try:
            return int(str(value).strip())
        except ValueError:
            pass
        try:
            f = float(value)
        except (TypeError, ValueError):
            f = float("nan")
        if not f.is_integer():
            raise ConfigError(f"{name} expects an integer, got {value!r}")
        return int(f)
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} expects a number, got {value!r}") from None
    return str(value)


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a JSON config document: one key per SimConfig field."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return {k: coerce(k, v) for k, v in raw.items()}


def build_config(preset: str | None = DEFAULT_PRESET,
                 file_values: Mapping[str, Any] | None = None,
                 overrides: Mapping[str, Any] | None = None) -> SimConfig:
    """Layer preset < config file < explicit overrides."""
    values: dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    for layer in (file_values, overrides):
        if layer:
            values.update({k: coerce(k, v) for k, v in layer.items()})
    return SimConfig(**values)


def preset(name: str = DEFAULT_PRESET, **overrides) -> SimConfig:
    return build_config(name, overrides=overrides)
