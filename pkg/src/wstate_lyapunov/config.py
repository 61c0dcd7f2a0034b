"""Scenario configuration files (YAML).

A scenario file is a mapping with the sections ``model``, ``evolution``,
``control``, optional ``detection``, ``sweep`` and ``expect``, plus the
top-level ``scenario`` name and ``output_path``.  See README.md for the
schema.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .control import LAWS, ControlLaw
from .detection import DetectionParams
from .dynamics import EvolutionSpec
from .model import ModelParams

SCENARIOS = {
    # name: (generator kind, default law)
    "closed": ("closed", "proportional"),
    "closed_sweep_omega": ("closed", "proportional"),
    "closed_sweep_nu": ("closed", "proportional"),
    "emission": ("emission", "compensating"),
    "emission_detection": ("emission", "compensating"),
    "mode_decay": ("mode_decay", "compensating"),
    "mode_decay_feedback": ("feedback", "proportional"),
    "time_optimal_closed": ("closed", "proportional"),
    "time_optimal_emission": ("emission", "compensating"),
    "time_optimal_mode_decay": ("mode_decay", "compensating"),
}

TOP_KEYS = {"scenario", "output_path", "model", "evolution", "control", "detection",
            "sweep", "expect"}
MODEL_SHORTHANDS = {"g": ("g1", "g2", "g3"), "omega": ("omega1", "omega2", "omega3")}
EVOLUTION_KEYS = {"t_end", "dt", "sample_every", "switch_off_at_peak", "peak_margin",
                  "peak_arm", "n_max", "reduce", "field_update"}
CONTROL_KEYS = {"law", "K", "W_max", "S", "epsilon_den", "f_cap", "K_fb", "epsilon_sign"}
BOOL_KEYS = {"switch_off_at_peak", "reduce"}
STR_KEYS = {"field_update", "law"}
INT_KEYS = {"sample_every", "n_max"}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Expectation:
    run: str
    metric: str
    value: float | None = None
    tol: float | None = None
    min: float | None = None
    max: float | None = None

    def check(self, actual: float | None) -> bool:
        if actual is None:
            return False
        ok = True
        if self.value is not None:
            ok &= abs(actual - self.value) <= (self.tol or 0.0)
        if self.min is not None:
            ok &= actual >= self.min
        if self.max is not None:
            ok &= actual <= self.max
        return bool(ok)


@dataclass
class ScenarioConfig:
    scenario: str
    model: ModelParams
    evolution: dict[str, Any]
    control: dict[str, Any]
    detection: DetectionParams | None = None
    sweep: dict[str, Any] | None = None
    expect: list[Expectation] = field(default_factory=list)
    output_path: Path = Path("runs")
    raw: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def kind(self) -> str:
        return SCENARIOS[self.scenario][0]

    def law(self, kind: str | None = None) -> ControlLaw:
        opts = dict(self.control)
        opts["kind"] = kind or opts.pop("law", SCENARIOS[self.scenario][1])
        opts.pop("law", None)
        return ControlLaw(**opts)

    def evolution_spec(self, law: ControlLaw | None = None, **overrides) -> EvolutionSpec:
        opts = {**self.evolution, **overrides}
        return EvolutionSpec(kind=self.kind, params=self.model,
                             control_law=law or self.law(), **opts)


def _number(value, path: str, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name, {}) or {}
    if not isinstance(sec, dict):
        raise ConfigError(name, "expected a mapping")
    return sec


def _typed(key: str, value, path: str):
    if key in BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if key in STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    return _number(value, path, int if key in INT_KEYS else float)


def parse_model(sec: dict) -> ModelParams:
    names = {f.name for f in fields(ModelParams)}
    kw = {}
    for key, value in sec.items():
        path = f"model.{key}"
        if key in MODEL_SHORTHANDS:
            for k in MODEL_SHORTHANDS[key]:
                kw.setdefault(k, _number(value, path))
        elif key in names:
            kw[key] = _number(value, path)
        else:
            raise ConfigError(path, "unknown model parameter")
    # explicit per-atom values win over the shorthand
    for key, value in sec.items():
        if key in names:
            kw[key] = _number(value, f"model.{key}")
    try:
        return ModelParams(**kw)
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from None


def _parse_flat(sec: dict, allowed: set[str], name: str) -> dict:
    out = {}
    for key, value in sec.items():
        path = f"{name}.{key}"
        if key not in allowed:
            raise ConfigError(path, f"unknown {name} option")
        out[key] = _typed(key, value, path)
    return out


def parse_detection(sec: dict) -> DetectionParams:
    names = {f.name for f in fields(DetectionParams)}
    kw = {}
    for key, value in sec.items():
        path = f"detection.{key}"
        if key not in names:
            raise ConfigError(path, "unknown detection option")
        kw[key] = _number(value, path, int if key == "sample_every" else float)
    try:
        return DetectionParams(**kw)
    except ValueError as exc:
        raise ConfigError("detection", str(exc)) from None


def parse_config(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a mapping")
    for key in raw:
        if key not in TOP_KEYS:
            raise ConfigError(key, "unknown top-level key")
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}")

    model = parse_model(_section(raw, "model"))
    evolution = _parse_flat(_section(raw, "evolution"), EVOLUTION_KEYS, "evolution")
    control = _parse_flat(_section(raw, "control"), CONTROL_KEYS, "control")
    if "law" in control and control["law"] not in LAWS:
        raise ConfigError("control.law", f"unknown law {control['law']!r}; expected one of {LAWS}")

    detection = None
    if "detection" in raw:
        detection = parse_detection(_section(raw, "detection"))
    elif scenario == "emission_detection":
        raise ConfigError("detection", "section required by scenario emission_detection")

    sweep = None
    if "sweep" in raw:
        if scenario == "emission_detection" or scenario.startswith("time_optimal"):
            raise ConfigError("sweep", f"scenario {scenario} does not take a sweep block; "
                                       "use the sweep subcommand")
        sweep = _section(raw, "sweep")
        _validate_sweep(sweep, raw)
    elif scenario.startswith("closed_sweep"):
        raise ConfigError("sweep", f"section required by scenario {scenario}")

    expect = []
    for i, item in enumerate(raw.get("expect", []) or []):
        path = f"expect[{i}]"
        if not isinstance(item, dict) or "metric" not in item:
            raise ConfigError(path, "expected a mapping with at least 'metric'")
        extra = set(item) - {"run", "metric", "value", "tol", "min", "max"}
        if extra:
            raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown expectation key")
        nums = {k: _number(item[k], f"{path}.{k}") for k in ("value", "tol", "min", "max") if k in item}
        expect.append(Expectation(run=str(item.get("run", "")), metric=str(item["metric"]), **nums))

    out = Path(raw.get("output_path", "runs"))
    if base_dir is not None and not out.is_absolute():
        out = base_dir / out
    cfg = ScenarioConfig(scenario, model, evolution, control, detection, sweep, expect, out, raw)
    try:
        cfg.evolution_spec()
    except (ValueError, TypeError) as exc:
        raise ConfigError("evolution", str(exc)) from None
    return cfg


def _validate_sweep(sweep: dict, raw: dict) -> None:
    if set(sweep) - {"param", "values", "paired"}:
        raise ConfigError("sweep", "allowed keys are param, values, paired")
    if "param" not in sweep or "values" not in sweep:
        raise ConfigError("sweep", "param and values are required")
    check_param(raw, sweep["param"])
    values = sweep["values"]
    if not isinstance(values, list):
        raise ConfigError("sweep.values", "expected a list")
    for i, v in enumerate(values):
        _number(v, f"sweep.values[{i}]")
    for name, vals in (sweep.get("paired") or {}).items():
        check_param(raw, name)
        if not isinstance(vals, list) or len(vals) != len(values):
            raise ConfigError(f"sweep.paired.{name}", "must list one value per sweep value")


def check_param(raw: dict, name: str) -> None:
    """A sweepable parameter is a numeric field ``section.key``."""
    parts = name.split(".")
    if len(parts) != 2 or parts[0] not in ("model", "evolution", "control", "detection"):
        raise ConfigError(name, "sweep parameter must look like section.key")
    section, key = parts
    if section == "model":
        ok = key in {f.name for f in fields(ModelParams)} or key in MODEL_SHORTHANDS
    elif section == "detection":
        ok = key in {f.name for f in fields(DetectionParams)}
    else:
        allowed = EVOLUTION_KEYS if section == "evolution" else CONTROL_KEYS
        ok = key in allowed and key not in BOOL_KEYS | STR_KEYS
    if not ok:
        raise ConfigError(name, "not a numeric configuration field")


def with_value(raw: dict, name: str, value) -> dict:
    """Copy of ``raw`` with the dotted parameter set to ``value``."""
    check_param(raw, name)
    out = copy.deepcopy(raw)
    section, key = name.split(".")
    sec = out.setdefault(section, {}) or {}
    out[section] = sec
    if section == "model" and key in MODEL_SHORTHANDS:
        for k in MODEL_SHORTHANDS[key]:
            sec.pop(k, None)
    sec[key] = value
    return out


def load_raw(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from None
    except OSError as exc:
        raise ConfigError(str(path), str(exc)) from None
    return raw if raw is not None else {}


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config(load_raw(path))
