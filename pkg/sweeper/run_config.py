"""
Run configuration for the sweeper commands.

Values come from CLI flags, then the YAML config file (`defaults` section plus
the subcommand section), then built-in defaults.
"""

import itertools
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from shared.config import SolverSettings
from shared.errors import ConfigError, ParameterError
from shared.models import Method, OutputFormat, SweepScale, SystemParams
from solvers.observables import RegimeThresholds

PARAM_NAMES = ("u", "j", "omega", "phi", "delta")

METHOD_ALIASES = {
    "exact": Method.EXACT_FOCK,
    "exact_fock": Method.EXACT_FOCK,
    "exact-fock": Method.EXACT_FOCK,
    "bogoliubov": Method.BOGOLIUBOV,
    "bog": Method.BOGOLIUBOV,
    "pmf": Method.P_MEAN_FIELD,
    "linear": Method.LINEAR_ORACLE,
}

# Keys that never change an output byte and stay out of the config hash.
UNHASHED_KEYS = {"workers", "out", "log_level", "log_file"}


class SweepAxis(BaseModel):
    """One swept parameter: `min:max:count[:log]`."""

    model_config = ConfigDict(frozen=True)

    name: str
    start: float
    stop: float
    count: int = Field(ge=1)
    scale: SweepScale = SweepScale.LINEAR

    @model_validator(mode="after")
    def _check(self) -> "SweepAxis":
        if self.name not in PARAM_NAMES:
            raise ConfigError(f"unknown sweep parameter '{self.name}'", name=self.name)
        if self.start > self.stop:
            raise ConfigError(f"sweep '{self.name}' has min > max", start=self.start, stop=self.stop)
        if self.scale == SweepScale.LOG and self.start <= 0.0:
            raise ConfigError(f"log sweep '{self.name}' needs a positive minimum", start=self.start)
        return self

    @classmethod
    def parse(cls, name: str, text: str) -> "SweepAxis":
        parts = str(text).split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"sweep '{name}' must look like min:max:count[:log]", value=text)
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"sweep '{name}' has non-numeric bounds", value=text)
        scale = SweepScale.LINEAR
        if len(parts) == 4:
            try:
                scale = SweepScale(parts[3])
            except ValueError:
                raise ConfigError(f"sweep '{name}' scale must be linear or log", value=text)
        if count < 1:
            raise ConfigError(f"sweep '{name}' needs count >= 1", value=text)
        return cls(name=name, start=start, stop=stop, count=count, scale=scale)

    def values(self) -> List[float]:
        if self.count == 1:
            return [self.start]
        if self.scale == SweepScale.LOG:
            return [float(v) for v in np.geomspace(self.start, self.stop, self.count)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.count)]


def parse_methods(value: Any) -> List[Method]:
    if value is None:
        return []
    items = value if isinstance(value, list) else str(value).split(",")
    methods = []
    for item in items:
        key = str(item).strip().lower()
        if not key:
            continue
        if key not in METHOD_ALIASES:
            raise ConfigError(f"unknown backend '{item}'", choices=sorted(METHOD_ALIASES))
        if METHOD_ALIASES[key] not in methods:
            methods.append(METHOD_ALIASES[key])
    return methods


def parse_float_list(value: Any, name: str) -> List[float]:
    if value is None:
        return []
    items = value if isinstance(value, list) else str(value).split(",")
    try:
        return [float(item) for item in items if str(item).strip() != ""]
    except ValueError:
        raise ConfigError(f"'{name}' must be a comma-separated list of numbers", value=value)


def parse_int_list(value: Any, name: str) -> List[int]:
    return [int(v) for v in parse_float_list(value, name)]


class RunConfig(BaseModel):
    """Fully resolved options of one sweeper invocation."""

    model_config = ConfigDict(frozen=True)

    command: str
    backends: List[Method] = Field(default_factory=list)
    base: Dict[str, float] = Field(default_factory=dict)
    gamma: Optional[float] = None
    sweeps: List[SweepAxis] = Field(default_factory=list)
    taus: List[float] = Field(default_factory=list)
    cutoff: Optional[int] = None
    cutoffs: List[int] = Field(default_factory=list)
    output_format: OutputFormat = OutputFormat.CSV
    out: Optional[str] = None
    workers: int = Field(default=1, ge=1)
    keep_going: bool = False
    force: bool = False
    threshold_overrides: Dict[str, float] = Field(default_factory=dict)
    solver: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("taus")
    @classmethod
    def _check_taus(cls, taus: List[float]) -> List[float]:
        if any(t < 0.0 for t in taus):
            raise ConfigError("delays must be nonnegative", taus=taus)
        return taus

    def thresholds(self, settings: SolverSettings) -> RegimeThresholds:
        """Thresholds from solver settings with explicit overrides applied."""
        return RegimeThresholds.from_settings(settings).model_copy(update=self.threshold_overrides)

    def axis(self, name: str) -> Optional[SweepAxis]:
        for sweep in self.sweeps:
            if sweep.name == name:
                return sweep
        return None

    def axis_values(self, name: str) -> List[float]:
        sweep = self.axis(name)
        if sweep is not None:
            return sweep.values()
        return [float(self.base.get(name, 0.0))]

    def points(self) -> List[SystemParams]:
        """Grid points in lexicographic order over (u, j, omega, phi, delta), gamma = 1."""
        gamma = self.gamma if self.gamma is not None else 1.0
        grid = itertools.product(*(self.axis_values(name) for name in PARAM_NAMES))
        points = []
        for values in grid:
            params = SystemParams(gamma=gamma, **dict(zip(PARAM_NAMES, values)))
            points.append(params.in_units_of_gamma())
        return points

    def hash_payload(self) -> Dict[str, Any]:
        payload = self.model_dump(mode="json")
        for key in UNHASHED_KEYS:
            payload.pop(key, None)
        return payload


def _pick(cli: Dict[str, Any], section: Dict[str, Any], key: str, default: Any = None) -> Any:
    value = cli.get(key)
    if value is not None:
        return value
    return section.get(key, default)


def build_run_config(command: str, cli: Dict[str, Any], section: Dict[str, Any],
                     solver: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Merge CLI values over config-file values for one subcommand."""
    try:
        base = {}
        sweeps = []
        for name in PARAM_NAMES:
            value = _pick(cli, section, name, 0.0)
            base[name] = float(value)
            sweep_text = _pick(cli, section, f"{name}_sweep")
            if sweep_text is not None:
                sweeps.append(SweepAxis.parse(name, sweep_text))

        taus = parse_float_list(_pick(cli, section, "taus"), "taus")
        tau_sweep = _pick(cli, section, "tau_sweep")
        if tau_sweep is not None:
            parts = str(tau_sweep).split(":")
            if len(parts) != 3:
                raise ConfigError("tau sweep must look like min:max:count", value=tau_sweep)
            taus = taus + [float(v) for v in np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))]

        threshold_values = {
            name: _pick(cli, section, name)
            for name in RegimeThresholds.model_fields
            if _pick(cli, section, name) is not None
        }

        cutoff = _pick(cli, section, "cutoff")
        return RunConfig(
            command=command,
            backends=parse_methods(_pick(cli, section, "backend")),
            base=base,
            gamma=_pick(cli, section, "gamma"),
            sweeps=sweeps,
            taus=taus,
            cutoff=None if cutoff is None else int(cutoff),
            cutoffs=parse_int_list(_pick(cli, section, "cutoffs"), "cutoffs"),
            output_format=OutputFormat(_pick(cli, section, "format", OutputFormat.CSV.value)),
            out=_pick(cli, section, "out"),
            workers=int(_pick(cli, section, "workers", 1)),
            keep_going=bool(_pick(cli, section, "keep_going", False)),
            force=bool(_pick(cli, section, "force", False)),
            threshold_overrides=threshold_values,
            solver=dict(solver or {}),
        )
    except ParameterError:
        raise
    except ValueError as e:
        raise ConfigError("invalid run configuration", reason=str(e))
