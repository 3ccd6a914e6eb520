"""
Backend registry, cross-method comparison and regime classification.
"""

import itertools
import math
from typing import Any, Callable, Dict, Iterable, List, Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from shared.config import SolverSettings
from shared.errors import InterferometerError, ParameterError
from shared.models import (
    ComparisonEntry,
    ComparisonRow,
    Method,
    MethodFailure,
    ObservableRecord,
    RegimeCell,
    SystemParams,
)
from solvers.bogoliubov import BogoliubovBackend, background
from solvers.exact_fock import ExactFockBackend, check_feasibility
from solvers.model import linear_steady_state
from solvers.pmf import PMeanFieldBackend

logger = structlog.get_logger("observables")

METHOD_ORDER = [Method.EXACT_FOCK, Method.BOGOLIUBOV, Method.P_MEAN_FIELD, Method.LINEAR_ORACLE]


class LinearOracleBackend:
    """Closed-form U=0 solution reported as a record (nonlinearity ignored)."""

    method = Method.LINEAR_ORACLE

    def __init__(self, settings: Optional[SolverSettings] = None):
        self.settings = settings or SolverSettings()

    def observables(self, params: SystemParams) -> ObservableRecord:
        n2 = linear_steady_state(params).n2
        g2 = 1.0 if n2 >= self.settings.n2_floor else None
        return ObservableRecord.build(params, self.method, n2, g2, {"exact_for_u_zero": params.u == 0.0})


def build_backend(method: Method, settings: Optional[SolverSettings] = None,
                  cutoff: Optional[int] = None, force: bool = False):
    """Instantiate the backend for one method."""
    settings = settings or SolverSettings()
    if method == Method.EXACT_FOCK:
        return ExactFockBackend(settings, cutoff=cutoff, force=force)
    if method == Method.BOGOLIUBOV:
        return BogoliubovBackend(settings)
    if method == Method.P_MEAN_FIELD:
        return PMeanFieldBackend(settings)
    if method == Method.LINEAR_ORACLE:
        return LinearOracleBackend(settings)
    raise ParameterError(f"unknown method: {method}")


def relative_deviation(a: float, b: float, floor: float = 1e-12) -> float:
    """|a - b| / max(|a|, |b|, floor)."""
    return abs(a - b) / max(abs(a), abs(b), floor)


def estimate_required_cutoff(params: SystemParams) -> int:
    """Fock cutoff that covers the largest coherent occupation n: n + 4 sqrt(n) + 3."""
    if params.delta == 0.0:
        n_max = float(np.max(background(params).occupations()))
    else:
        n_max = 4.0 * (params.omega / params.gamma) ** 2
    return max(3, int(math.ceil(n_max + 4.0 * math.sqrt(n_max) + 3.0)))


class CompareOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    cutoffs: List[int] = Field(default_factory=lambda: [5])
    force: bool = False


class RegimeThresholds(BaseModel):
    """Validity thresholds of the regime map."""

    model_config = ConfigDict(frozen=True)

    validity_ratio: float = 0.1
    agreement_tol: float = 0.05
    exact_max_cutoff: int = 8
    pmf_j_bound: float = 0.5
    pmf_u_floor: float = 1.0

    @classmethod
    def from_settings(cls, settings: SolverSettings) -> "RegimeThresholds":
        return cls(**{name: getattr(settings, name) for name in cls.model_fields})

    def apply(self, settings: SolverSettings) -> SolverSettings:
        return settings.model_copy(update=self.model_dump())


class RegimeGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega_over_gamma: float
    u_values: List[float]
    j_values: List[float]


def _entry_label(method: Method, cutoff: Optional[int]) -> str:
    return f"{method.value}@{cutoff}" if cutoff is not None else method.value


def _run_entry(params: SystemParams, method: Method, settings: SolverSettings,
               cutoff: Optional[int], force: bool) -> ComparisonEntry:
    label = _entry_label(method, cutoff)
    try:
        if method == Method.EXACT_FOCK:
            check_feasibility(cutoff, settings, force)
        record = build_backend(method, settings, cutoff=cutoff, force=force).observables(params)
    except InterferometerError as e:
        logger.info("Method failed in comparison", method=label, error=str(e))
        return ComparisonEntry(label=label, method=method, cutoff=cutoff,
                               failure=MethodFailure(error=type(e).__name__, details=e.message))
    return ComparisonEntry(label=label, method=method, cutoff=cutoff, n2=record.n2,
                           g2_zero=record.g2_zero, diagnostics=record.diagnostics,
                           valid=_own_validity(record, params))


def _own_validity(record: ObservableRecord, params: SystemParams) -> bool:
    diagnostics = record.diagnostics
    if record.method == Method.EXACT_FOCK:
        return bool(diagnostics.get("converged", True))
    if record.method == Method.BOGOLIUBOV:
        return bool(diagnostics.get("valid", False))
    if record.method == Method.P_MEAN_FIELD:
        return bool(diagnostics.get("small_j", False))
    return params.u == 0.0


def compare(params: SystemParams, methods: Iterable[Method], options: Optional[CompareOptions] = None,
            settings: Optional[SolverSettings] = None) -> ComparisonRow:
    """Run several backends on one point; failures become entries, never exceptions."""
    options = options or CompareOptions()
    settings = settings or SolverSettings()
    requested = [m for m in METHOD_ORDER if m in set(methods)]
    if len(requested) < 2:
        raise ParameterError("compare needs at least two methods", methods=[m.value for m in requested])

    entries: List[ComparisonEntry] = []
    for method in requested:
        if method == Method.EXACT_FOCK:
            for cutoff in sorted(set(options.cutoffs)):
                entries.append(_run_entry(params, method, settings, cutoff, options.force))
        else:
            entries.append(_run_entry(params, method, settings, None, options.force))

    # PMF outside its small-J window is still trusted where it matches a valid Bogoliubov result.
    bogoliubov = next((e for e in entries if e.method == Method.BOGOLIUBOV and e.valid), None)
    if bogoliubov is not None:
        entries = [
            e.model_copy(update={"valid": True})
            if e.method == Method.P_MEAN_FIELD and e.n2 is not None and not e.valid
            and relative_deviation(e.n2, bogoliubov.n2, settings.deviation_floor) < settings.agreement_tol
            else e
            for e in entries
        ]

    deviations: Dict[str, float] = {}
    flags: Dict[str, bool] = {}
    for first, second in itertools.combinations(entries, 2):
        if first.n2 is None or second.n2 is None:
            continue
        key = f"{first.label}~{second.label}"
        deviation = relative_deviation(first.n2, second.n2, settings.deviation_floor)
        deviations[key] = deviation
        flags[f"agree:{key}"] = deviation < settings.agreement_tol
    for entry in entries:
        flags[f"valid:{entry.label}"] = entry.valid

    # Exact n2 moving strictly closer to another method as the cutoff grows.
    exact = [e for e in entries if e.method == Method.EXACT_FOCK and e.n2 is not None]
    if len(exact) > 1:
        for other in entries:
            if other.method == Method.EXACT_FOCK or other.n2 is None:
                continue
            gaps = [abs(e.n2 - other.n2) for e in exact]
            flags[f"approaches:{other.label}"] = all(a > b for a, b in zip(gaps, gaps[1:]))

    return ComparisonRow(params=params, entries=entries, deviations=deviations, flags=flags)


def classify_cell(params: SystemParams, settings: SolverSettings) -> RegimeCell:
    """Label one (U, J, Omega) point with the methods considered valid there."""
    labels: List[Method] = []

    try:
        cutoff = estimate_required_cutoff(params)
        if cutoff <= settings.exact_max_cutoff:
            check_feasibility(cutoff, settings, force=False)
            labels.append(Method.EXACT_FOCK)
    except InterferometerError as e:
        logger.debug("Exact backend not feasible", error=str(e))

    bogoliubov: Optional[ObservableRecord] = None
    try:
        record = BogoliubovBackend(settings).observables(params)
        if record.diagnostics.get("valid"):
            bogoliubov = record
            labels.append(Method.BOGOLIUBOV)
    except InterferometerError as e:
        logger.debug("Bogoliubov backend failed", error=str(e))

    try:
        record = PMeanFieldBackend(settings).observables(params)
        agrees = bogoliubov is not None and relative_deviation(
            record.n2, bogoliubov.n2, settings.deviation_floor) < settings.agreement_tol
        if record.diagnostics.get("small_j") or agrees:
            labels.append(Method.P_MEAN_FIELD)
    except InterferometerError as e:
        logger.debug("PMF backend failed", error=str(e))

    g = params.gamma
    return RegimeCell(u_over_gamma=params.u / g, j_over_gamma=params.j / g,
                      omega_over_gamma=params.omega / g, labels=labels)


def _classify_task(task: Dict[str, Any]) -> RegimeCell:
    return classify_cell(SystemParams(**task["params"]), SolverSettings(**task["settings"]))


def regime_map(grid: RegimeGrid, thresholds: Optional[RegimeThresholds] = None,
               settings: Optional[SolverSettings] = None,
               mapper: Callable[..., Iterable[Any]] = map) -> List[RegimeCell]:
    """Cells in (u, j) lexicographic order; `mapper` may be an order-preserving pool map."""
    settings = settings or SolverSettings()
    if thresholds is not None:
        settings = thresholds.apply(settings)
    tasks = [
        {"params": {"u": u, "j": j, "omega": grid.omega_over_gamma, "gamma": 1.0},
         "settings": settings.model_dump()}
        for u, j in itertools.product(grid.u_values, grid.j_values)
    ]
    return list(mapper(_classify_task, tasks))
