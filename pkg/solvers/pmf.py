"""
P-function mean-field backend.

Tunneling is decoupled so the central cavity sees a single coherent drive
Omega_t = -2 J (<a1> + <a3>). A driven Kerr cavity has exact normal-ordered
moments

    <(a+)^k a^l> = (Omega_t*/U)^k (Omega_t/U)^l
                   * Gamma(c) Gamma(d) / (Gamma(k+c) Gamma(l+d))
                   * 0F2(k+c, l+d, x) / 0F2(c, d, x)

with c = -i gamma/U, d = i gamma/U and x = 2 |Omega_t/U|^2. The outer
cavities follow the central mean <a2> linearly, which closes a fixed-point
equation for <a2>.
"""

import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import optimize

from shared.config import SolverSettings
from shared.errors import (
    EmptyCavityError,
    FixedPointDidNotConvergeError,
    MultipleSolutionsDetectedError,
)
from shared.logging_config import get_logger, log_solver_run
from shared.models import Method, ObservableRecord, SystemParams
from solvers.model import drive_interference, linear_steady_state, require_zero_detuning
from solvers.special_functions import complex_log_gamma, hyper_0f2

IMAG_RESIDUE_RTOL = 1e-8

logger = get_logger("pmf")


class EffectiveDrive(BaseModel):
    """Self-consistent drive of the central cavity."""

    model_config = ConfigDict(frozen=True)

    omega_tilde: complex
    residual: float = 0.0
    iterations: int = 0


class MomentTable(BaseModel):
    """moments[k][l] = <(a2+)^k a2^l>."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: Any

    @property
    def max_order(self) -> int:
        return self.values.shape[0] - 1

    def get(self, k: int, l: int) -> complex:
        return complex(self.values[k, l])

    @property
    def n2(self) -> float:
        return float(self.values[1, 1].real)

    def g2_zero(self, floor: float = 1e-14) -> float:
        n2 = self.n2
        if n2 < floor:
            raise EmptyCavityError("central cavity is empty, g2 undefined", n2=n2)
        return float(self.values[2, 2].real) / (n2 * n2)


def effective_drive(params: SystemParams, mean_a2: complex) -> complex:
    """Omega_t = (2iJ/gamma)(Omega (1 + e^{i phi}) - 4 J <a2>)."""
    j, g = params.j, params.gamma
    return 2j * j / g * (params.omega * drive_interference(params.phi) - 4.0 * j * mean_a2)


def _kerr_parameters(drive: complex, u: float, gamma: float) -> Tuple[complex, complex, float]:
    c = -1j * gamma / u
    d = 1j * gamma / u
    x = 2.0 * abs(drive / u) ** 2
    return c, d, x


def _kerr_moment(k: int, l: int, drive: complex, u: float, gamma: float,
                 norm: complex) -> complex:
    c, d, x = _kerr_parameters(drive, u, gamma)
    if k == 0 and l == 0:
        return 1.0 + 0j
    if drive == 0:
        return 0j
    prefactor = np.exp(complex_log_gamma(c) + complex_log_gamma(d)
                       - complex_log_gamma(k + c) - complex_log_gamma(l + d))
    power = (np.conj(drive) / u) ** k * (drive / u) ** l
    return complex(power * prefactor * hyper_0f2(k + c, l + d, x) / norm)


def kerr_mean(drive: complex, u: float, gamma: float) -> complex:
    """<a> of a driven Kerr cavity; -i drive/gamma when u == 0."""
    if u == 0.0:
        return -1j * drive / gamma
    c, d, x = _kerr_parameters(drive, u, gamma)
    return _kerr_moment(0, 1, drive, u, gamma, hyper_0f2(c, d, x))


def kerr_moments(drive: complex, u: float, gamma: float, max_order: int = 2) -> MomentTable:
    """Moment table of H = -(U/2)a+a+aa + (drive/2)a+ + (drive*/2)a with decay gamma."""
    size = max_order + 1
    values = np.zeros((size, size), dtype=complex)
    if u == 0.0:
        beta = -1j * drive / gamma
        for k in range(size):
            for l in range(size):
                values[k, l] = np.conj(beta) ** k * beta ** l
        return MomentTable(values=values)

    c, d, x = _kerr_parameters(drive, u, gamma)
    norm = hyper_0f2(c, d, x)
    for k in range(size):
        for l in range(k, size):
            values[k, l] = _kerr_moment(k, l, drive, u, gamma, norm)
            values[l, k] = np.conj(values[k, l])
    for k in range(size):
        diag = values[k, k]
        if abs(diag.imag) > IMAG_RESIDUE_RTOL * max(abs(diag), 1e-300):
            logger.warning("Diagonal moment has an imaginary residue", k=k, value=str(diag))
        values[k, k] = diag.real
    return MomentTable(values=values)


def moments(params: SystemParams, drive: EffectiveDrive, max_order: int = 2) -> MomentTable:
    require_zero_detuning(params)
    return kerr_moments(drive.omega_tilde, params.u, params.gamma, max_order)


def mean_field_map(params: SystemParams, mean_a2: complex) -> complex:
    """<a2> produced by the drive that a trial <a2> induces."""
    return kerr_mean(effective_drive(params, mean_a2), params.u, params.gamma)


def _residual(params: SystemParams, x: complex) -> float:
    return abs(x - mean_field_map(params, x))


def _converged(x: complex, residual: float, tol: float) -> bool:
    return residual <= tol * (1.0 + abs(x))


def _damped_iteration(params: SystemParams, x0: complex,
                      settings: SolverSettings) -> Tuple[complex, float, int]:
    """x <- (1 - lam) x + lam F(x), halving lam whenever the residual grows."""
    lam = settings.pmf_damping
    x = complex(x0)
    fx = mean_field_map(params, x)
    residual = abs(x - fx)
    iterations = 0
    while iterations < settings.pmf_max_iterations:
        if _converged(x, residual, settings.pmf_tol):
            break
        iterations += 1
        trial = (1.0 - lam) * x + lam * fx
        f_trial = mean_field_map(params, trial)
        r_trial = abs(trial - f_trial)
        if r_trial < residual:
            x, fx, residual = trial, f_trial, r_trial
        else:
            lam *= 0.5
            if lam < settings.pmf_min_damping:
                break
    return x, residual, iterations


def _polish(params: SystemParams, x0: complex) -> complex:
    def equations(v: np.ndarray) -> List[float]:
        x = complex(v[0], v[1])
        delta = x - mean_field_map(params, x)
        return [delta.real, delta.imag]

    solution = optimize.root(equations, [x0.real, x0.imag], method="hybr")
    return complex(solution.x[0], solution.x[1])


def _solve_from(params: SystemParams, x0: complex,
                settings: SolverSettings) -> Tuple[complex, float, int, bool]:
    x, residual, iterations = _damped_iteration(params, x0, settings)
    if not _converged(x, residual, settings.pmf_tol):
        polished = _polish(params, x)
        polished_residual = _residual(params, polished)
        if np.isfinite(polished_residual) and polished_residual < residual:
            x, residual = polished, polished_residual
    return x, residual, iterations, _converged(x, residual, settings.pmf_tol)


def solve_self_consistent(params: SystemParams, settings: Optional[SolverSettings] = None
                          ) -> Tuple[EffectiveDrive, complex]:
    """Fixed point of <a2> = F(<a2>), scanned from three initial guesses."""
    settings = settings or SolverSettings()
    require_zero_detuning(params)

    if params.u == 0.0:
        alpha2 = linear_steady_state(params).alpha2
        return EffectiveDrive(omega_tilde=effective_drive(params, alpha2)), alpha2

    linear = linear_steady_state(params).alpha2
    guesses = [linear, 0j, 2.0 * linear]
    solutions: List[Tuple[complex, float, int]] = []
    last_residual, total_iterations = float("inf"), 0
    for guess in guesses:
        x, residual, iterations, ok = _solve_from(params, guess, settings)
        total_iterations += iterations
        last_residual = residual
        if ok:
            solutions.append((x, residual, iterations))

    if not solutions:
        logger.error("Self-consistent solve failed", params=params.model_dump(),
                     residual=last_residual, iterations=total_iterations)
        raise FixedPointDidNotConvergeError("self-consistent <a2> did not converge",
                                            residual=last_residual, iterations=total_iterations)

    best = solutions[0]
    for other in solutions[1:]:
        if abs(other[0] - best[0]) > settings.pmf_solution_separation:
            raise MultipleSolutionsDetectedError("several self-consistent solutions found",
                                                 first=str(best[0]), second=str(other[0]))

    mean_a2, residual, iterations = best
    drive = EffectiveDrive(omega_tilde=effective_drive(params, mean_a2),
                           residual=residual, iterations=total_iterations)
    return drive, mean_a2


class PMeanFieldBackend:
    """Central-cavity observables from the exact Kerr moments under a mean-field drive."""

    method = Method.P_MEAN_FIELD

    def __init__(self, settings: Optional[SolverSettings] = None):
        self.settings = settings or SolverSettings()
        self.logger = get_logger("pmf")

    def observables(self, params: SystemParams) -> ObservableRecord:
        start = time.perf_counter()
        drive, mean_a2 = solve_self_consistent(params, self.settings)
        table = moments(params, drive, max_order=2)
        n2 = table.n2

        diagnostics: Dict[str, Any] = {
            "residual": drive.residual,
            "iterations": drive.iterations,
            "omega_tilde_re": drive.omega_tilde.real,
            "omega_tilde_im": drive.omega_tilde.imag,
            "converged": True,
            "small_j": params.j <= self.settings.pmf_j_bound * params.gamma
                       and params.u >= self.settings.pmf_u_floor * params.gamma,
        }

        g2 = None
        if params.u == 0.0:
            g2 = 1.0 if n2 >= self.settings.background_floor else None
        else:
            try:
                g2 = table.g2_zero(self.settings.background_floor)
            except EmptyCavityError as e:
                diagnostics["g2_undefined"] = type(e).__name__
        if g2 is None:
            diagnostics.setdefault("g2_undefined", "EmptyCavityError")

        log_solver_run(self.logger, self.method.value, params.model_dump(), True,
                       (time.perf_counter() - start) * 1e3, n2=n2, residual=drive.residual)
        return ObservableRecord.build(params, self.method, n2, g2, diagnostics)
