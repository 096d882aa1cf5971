"""
Run configuration: a flat `section.key = value` text format mapped onto the package dataclasses.

    # uniform block, theta in (0.2, 0.7)
    model.d = 1.0
    model.alpha = 0.005
    model.theta_min = 0.2
    model.theta_max = 0.7
    integrator.t_end = 200
    sweep.alpha = 0.001:0.012:0.001
"""
import dataclasses
import logging
import math
import typing
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from nlallee.errors import ConfigError, DomainError
from nlallee.experiments import InitialCondition, SimulationConfig
from nlallee.grid import GridSpec
from nlallee.integrate import IntegratorConfig
from nlallee.model import ModelParams
from nlallee.monitor import MonitorOptions

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepSpec:
    alpha: Tuple[float, ...] = tuple(round(0.001 * k, 12) for k in range(1, 13))
    L: Tuple[float, ...] = (5.0, 10.0, 20.0, 40.0, 80.0)

    def __post_init__(self):
        if not self.alpha or not self.L:
            raise DomainError("sweep.alpha and sweep.L must be nonempty.")


@dataclass(frozen=True)
class ScanSpec:
    theta_tilde: Tuple[float, ...] = tuple(round(0.25 + 0.05 * k, 12) for k in range(13))
    L: float = 5.0
    sigma: float = 0.1
    control: bool = True

    def __post_init__(self):
        if not self.theta_tilde:
            raise DomainError("scan.theta_tilde must be nonempty.")


@dataclass(frozen=True)
class OracleSpec:
    d: float = 1.0
    theta0: Tuple[float, ...] = (-1.0, -0.75, 0.0, 0.25, 0.5)
    x_lo: float = -200.0
    x_hi: float = 200.0
    nx: int = 2001
    t_end: float = 120.0
    plateau_width: float = 20.0
    level: float = 0.5

    def __post_init__(self):
        if not self.theta0:
            raise DomainError("oracle.theta0 must be nonempty.")
        if not self.x_lo + self.plateau_width < self.x_hi:
            raise DomainError("oracle plateau does not fit in the domain.")


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    #: Times whose snapshot is written; empty writes every recorded snapshot.
    snapshot_times: Tuple[float, ...] = ()
    gnuplot: bool = False


@dataclass(frozen=True)
class RunConfig:
    model: Optional[ModelParams] = None
    grid: GridSpec = field(default_factory=GridSpec)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    initial: InitialCondition = field(default_factory=InitialCondition)
    sweep: Optional[SweepSpec] = None
    scan: Optional[ScanSpec] = None
    oracle: Optional[OracleSpec] = None
    monitor: MonitorOptions = field(default_factory=MonitorOptions)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def simulation(self) -> SimulationConfig:
        return SimulationConfig(grid=self.grid, integrator=self.integrator)

    def require_model(self) -> ModelParams:
        if self.model is None:
            raise ConfigError("this command needs a [model] section (model.d, model.alpha, ...)", key="model")
        return self.model


SECTIONS = {
    "model": ModelParams,
    "grid": GridSpec,
    "integrator": IntegratorConfig,
    "initial": InitialCondition,
    "sweep": SweepSpec,
    "scan": ScanSpec,
    "oracle": OracleSpec,
    "monitor": MonitorOptions,
    "output": OutputSpec,
}

_TRUE = ("true", "yes", "on", "1")
_FALSE = ("false", "no", "off", "0")


def parse_range(text: str):
    """`start:stop:step`, stop included when it is hit within 1e-9 relative."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"range '{text}' is not start:stop:step")
    start, stop, step = (float(part) for part in parts)
    if not step > 0 or stop < start:
        raise ValueError(f"range '{text}' needs step > 0 and stop >= start")
    steps = (stop - start) / step
    count = int(math.floor(steps + 1e-9 * max(1.0, abs(steps)))) + 1
    return [float(f"{value:.12g}") for value in start + step * np.arange(count)]


def _convert(text: str, hint):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)

    if origin is typing.Union and type(None) in args:
        if text.lower() == "none":
            return None
        inner = [arg for arg in args if arg is not type(None)][0]
        return _convert(text, inner)

    if origin is tuple:
        if not text:
            return ()
        values = []
        for item in text.split(","):
            item = item.strip()
            if ":" in item:
                values.extend(parse_range(item))
            else:
                values.append(_convert(item, args[0]))
        return tuple(values)

    if hint is bool:
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        raise ValueError(f"'{text}' is not a boolean")
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    return text


def parse_config(text: str) -> RunConfig:
    values = {}
    first_line = {}
    seen = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'section.key = value'", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", line=number, key=key)
        seen[key] = number

        section, _, name = key.partition(".")
        if section not in SECTIONS:
            raise ConfigError(f"unknown section '{section}'", line=number, key=key)
        hints = typing.get_type_hints(SECTIONS[section])
        if name not in hints:
            raise ConfigError(f"unknown key in section '{section}'", line=number, key=key)
        try:
            converted = _convert(value, hints[name])
        except ValueError as exc:
            raise ConfigError(f"cannot parse '{value}': {exc}", line=number, key=key) from exc

        values.setdefault(section, {})[name] = converted
        first_line.setdefault(section, number)

    sections = {}
    for section, fields_ in values.items():
        cls = SECTIONS[section]
        missing = [
            f.name
            for f in dataclasses.fields(cls)
            if f.name not in fields_
            and f.default is dataclasses.MISSING
            and f.default_factory is dataclasses.MISSING
        ]
        if missing:
            raise ConfigError(
                f"missing key(s) {', '.join(section + '.' + name for name in missing)}",
                line=first_line[section],
                key=section,
            )
        try:
            sections[section] = cls(**fields_)
        except DomainError as exc:
            raise ConfigError(str(exc), line=first_line[section], key=section) from exc

    return RunConfig(**sections)


def load_config(path) -> RunConfig:
    with open(path) as f:
        config = parse_config(f.read())
    logger.info("loaded config %s", path)
    return config


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: RunConfig) -> str:
    """Canonical text form; parse_config(dump_config(c)) == c."""
    lines = []
    for section in SECTIONS:
        value = getattr(config, section)
        if value is None:
            continue
        for f in dataclasses.fields(value):
            lines.append(f"{section}.{f.name} = {_format(getattr(value, f.name))}")
        lines.append("")
    return "\n".join(lines)
