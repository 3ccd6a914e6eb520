"""
Shared models and data structures for the interferometer simulation.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from shared.errors import NegativeRateError, NonFiniteError, NonPositiveGammaError

TWO_PI = 2.0 * math.pi


class Method(str, Enum):
    EXACT_FOCK = "exact_fock"
    BOGOLIUBOV = "bogoliubov"
    P_MEAN_FIELD = "pmf"
    LINEAR_ORACLE = "linear"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class SweepScale(str, Enum):
    LINEAR = "linear"
    LOG = "log"


# Physical parameters
class SystemParams(BaseModel):
    """Parameters of the three-site model, validated on construction.

    Rates are absolute (u, j, omega, delta in the same unit as gamma); phi is
    reduced to [0, 2*pi).
    """

    model_config = ConfigDict(frozen=True)

    u: float = 0.0
    j: float = 0.0
    omega: float = 0.0
    gamma: float = 1.0
    phi: float = 0.0
    delta: float = 0.0

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        values = dict(data)
        for name in ("u", "j", "omega", "gamma", "phi", "delta"):
            if name not in values:
                continue
            value = float(values[name])
            if not math.isfinite(value):
                raise NonFiniteError(f"{name} must be finite", field=name, value=str(value))
            values[name] = value

        if values.get("gamma", 1.0) <= 0.0:
            raise NonPositiveGammaError("gamma must be positive", gamma=values.get("gamma"))
        for name in ("u", "j", "omega"):
            if values.get(name, 0.0) < 0.0:
                raise NegativeRateError(f"{name} must be nonnegative", field=name, value=values[name])

        phi = math.fmod(values.get("phi", 0.0), TWO_PI)
        if phi < 0.0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        values["phi"] = phi
        return values

    def replace(self, **changes: float) -> "SystemParams":
        """Return a validated copy with some fields changed."""
        return SystemParams(**{**self.model_dump(), **changes})

    def in_units_of_gamma(self) -> "SystemParams":
        """Rescale every rate so that gamma == 1."""
        g = self.gamma
        return SystemParams(u=self.u / g, j=self.j / g, omega=self.omega / g,
                            gamma=1.0, phi=self.phi, delta=self.delta / g)


class LinearSolution(BaseModel):
    """Coherent amplitudes of the U=0 steady state."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha1: complex
    alpha2: complex
    alpha3: complex

    @property
    def n2(self) -> float:
        return abs(self.alpha2) ** 2


# Result records
class MethodFailure(BaseModel):
    error: str
    details: Optional[str] = None


class ObservableRecord(BaseModel):
    """One result row: central-cavity occupation and g2(0) from one method."""

    model_config = ConfigDict(frozen=True)

    params: SystemParams
    method: Method
    n2: float = Field(ge=0.0)
    g2_zero: Optional[float] = None
    output_flux: float = Field(ge=0.0)
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_flux(self) -> "ObservableRecord":
        if self.output_flux != self.params.gamma * self.n2:
            raise ValueError("output_flux must equal gamma * n2")
        return self

    @classmethod
    def build(cls, params: SystemParams, method: Method, n2: float,
              g2_zero: Optional[float], diagnostics: Optional[Dict[str, Any]] = None
              ) -> "ObservableRecord":
        n2 = max(float(n2), 0.0)
        return cls(
            params=params,
            method=method,
            n2=n2,
            g2_zero=None if g2_zero is None else float(g2_zero),
            output_flux=params.gamma * n2,
            diagnostics=diagnostics or {},
        )


class ComparisonEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    method: Method
    cutoff: Optional[int] = None
    n2: Optional[float] = None
    g2_zero: Optional[float] = None
    valid: bool = False
    failure: Optional[MethodFailure] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class ComparisonRow(BaseModel):
    """Per-method results for one parameter point and their pairwise deviations."""

    model_config = ConfigDict(frozen=True)

    params: SystemParams
    entries: List[ComparisonEntry] = Field(default_factory=list)
    deviations: Dict[str, float] = Field(default_factory=dict)
    flags: Dict[str, bool] = Field(default_factory=dict)

    def entry(self, label: str) -> Optional[ComparisonEntry]:
        for item in self.entries:
            if item.label == label:
                return item
        return None


class RegimeCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    u_over_gamma: float
    j_over_gamma: float
    omega_over_gamma: float
    labels: List[Method] = Field(default_factory=list)

    @property
    def label_string(self) -> str:
        if not self.labels:
            return "none"
        return "|".join(label.value for label in self.labels)
