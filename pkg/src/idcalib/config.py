"""TOML experiment configuration with flag overrides.

Precedence, lowest to highest: built-in defaults, the config file, CLI flags.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import tomli

from .calibrate import Mask, Strategy
from .core import ValidationError
from .engine import EngineConfig
from .simbench import Scenario

SWEEPABLE = ("k_c", "k_u", "tau", "e_u")
_ENGINE_KEYS = {f.name for f in fields(EngineConfig)} - {"vocab_size", "feature_dim"}
_SCENARIO_KEYS = {f.name for f in fields(Scenario)} - {"seed"}
_RUN_KEYS = {"calibration", "seeds", "disable"}


@dataclass
class Experiment:
    scenario: dict = field(default_factory=dict)
    engine: dict = field(default_factory=dict)
    calibration: Strategy = Strategy.TCEI
    seeds: list[int] = field(default_factory=lambda: [0])
    disable: tuple[str, ...] = ()
    sweep: dict[str, list] = field(default_factory=dict)

    def scenario_for(self, seed: int) -> Scenario:
        return Scenario(seed=seed, **self.scenario)

    def engine_config(self, **overrides) -> EngineConfig:
        sc = self.scenario_for(self.seeds[0])
        return EngineConfig(sc.vocab_size, sc.feature_dim, **{**self.engine, **overrides})

    @property
    def mask(self) -> Mask:
        return Mask(**{name: False for name in self.disable})

    def validate(self) -> "Experiment":
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        self.scenario_for(self.seeds[0])
        self.engine_config()
        self.mask
        for key, values in self.sweep.items():
            if key not in SWEEPABLE:
                raise ValidationError(f"cannot sweep {key!r}; choose from {SWEEPABLE}")
            if not isinstance(values, list) or not values:
                raise ValidationError(f"sweep.{key} must be a non-empty list")
            for v in values:
                self.engine_config(**{key: v})
        return self


def _check_keys(section: str, table: dict, allowed: set) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ValidationError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")


def canonical_text() -> str:
    return resources.files("idcalib").joinpath("data/canonical.toml").read_text()


def load(path: str | Path | None = None) -> Experiment:
    """Parse a config file; None loads the bundled canonical scenario."""
    if path is None:
        text = canonical_text()
    else:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"config file not found: {p}")
        text = p.read_text()
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ValidationError(f"invalid TOML: {exc}") from exc
    _check_keys("top level", raw, {"scenario", "engine", "run", "sweep"})
    scenario = raw.get("scenario", {})
    engine = raw.get("engine", {})
    run = raw.get("run", {})
    sweep = raw.get("sweep", {})
    _check_keys("scenario", scenario, _SCENARIO_KEYS)
    _check_keys("engine", engine, _ENGINE_KEYS)
    _check_keys("run", run, _RUN_KEYS)
    try:
        exp = Experiment(
            scenario=copy.deepcopy(scenario),
            engine=copy.deepcopy(engine),
            calibration=Strategy(run.get("calibration", "tcei")),
            seeds=[int(s) for s in run.get("seeds", [0])],
            disable=tuple(run.get("disable", ())),
            sweep=copy.deepcopy(sweep),
        )
        return exp.validate()
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc


def apply_overrides(exp: Experiment, **flags) -> Experiment:
    """Overlay non-None flag values onto a loaded experiment."""
    exp = copy.deepcopy(exp)
    for key, value in flags.items():
        if value is None:
            continue
        if key == "seed":
            exp.seeds = [int(value)]
        elif key == "calibration":
            exp.calibration = Strategy(value)
        elif key == "disable":
            exp.disable = tuple(value)
        elif key == "drift_rate":
            exp.scenario["drift_rate"] = value
        elif key in _ENGINE_KEYS:
            exp.engine[key] = value
        else:
            raise ValidationError(f"unknown override {key!r}")
    try:
        return exp.validate()
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc
