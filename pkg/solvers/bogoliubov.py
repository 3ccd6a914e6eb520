"""
Bogoliubov backend.

The field of each cavity is split into a coherent background and a Gaussian
fluctuation, a_k = alpha_k + da_k. The background solves the classical
steady-state equations (a cubic in n2 = |alpha_2|^2 at zero detuning); the
fluctuation second moments solve the linear moment equations of the
quadratic Liouvillian

    H2 = da+ K da + (1/2)(da+ G da+ + h.c.),

with K the hopping matrix whose central entry is shifted by -2 U n2 and
G = diag(0, -U alpha_2^2, 0).
"""

import time
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from shared.config import SolverSettings
from shared.errors import (
    EmptyBackgroundError,
    SingularMomentSystemError,
    SolverDidNotConvergeError,
)
from shared.logging_config import get_logger, log_solver_run
from shared.models import Method, ObservableRecord, SystemParams
from solvers.model import (
    drive_interference,
    hopping_matrix,
    linear_steady_state,
    outer_amplitudes,
    require_zero_detuning,
)

NEWTON_MAX_STEPS = 100
CUBIC_RTOL = 1e-10

logger = get_logger("bogoliubov")


class CoherentBackground(BaseModel):
    """Classical amplitudes of the three cavities."""

    model_config = ConfigDict(frozen=True)

    alpha1: complex
    alpha2: complex
    alpha3: complex
    n2: float

    def amplitudes(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.alpha3], dtype=complex)

    def occupations(self) -> np.ndarray:
        return np.abs(self.amplitudes()) ** 2


class FluctuationMoments(BaseModel):
    """Second moments N_ij = <da_i+ da_j> and A_ij = <da_i da_j>."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    normal: Any
    anomalous: Any

    def nfluc(self, site: int) -> float:
        return float(self.normal[site - 1, site - 1].real)

    def anom(self, site: int) -> complex:
        return complex(self.anomalous[site - 1, site - 1])


def cubic_coefficients(params: SystemParams):
    """(a, b, c) of a n^3 + b n = c."""
    g, j, u = params.gamma, params.j, params.u
    one_plus_cos = drive_interference(params.phi).real
    a = 4.0 * g * g * u * u
    b = (g * g + 8.0 * j * j) ** 2
    c = 8.0 * j * j * params.omega ** 2 * one_plus_cos
    return a, b, c


def cubic_residual(params: SystemParams, n2: float) -> float:
    a, b, c = cubic_coefficients(params)
    return a * n2 ** 3 + b * n2 - c


def closed_form_occupation(params: SystemParams) -> float:
    """Cardano root of the background cubic written through the auxiliary eta."""
    g, j, u, omega = params.gamma, params.j, params.u, params.omega
    one_plus_cos = drive_interference(params.phi).real
    s = g * g + 8.0 * j * j
    cos4 = 0.25 * one_plus_cos ** 2
    radicand = g ** 6 * u ** 6 * (6912.0 * g * g * j ** 4 * u * u * omega ** 4 * cos4 + s ** 6)
    eta3 = 72.0 * g ** 4 * j * j * u ** 4 * omega ** 2 * one_plus_cos + np.sqrt(3.0) * np.sqrt(radicand)
    eta = np.cbrt(eta3)
    return float((eta * eta - 3.0 ** (1.0 / 3.0) * u * u * g * g * s * s)
                 / (2.0 * 3.0 ** (2.0 / 3.0) * u * u * g * g * eta))


def _newton_polish(params: SystemParams, start: float) -> float:
    a, b, c = cubic_coefficients(params)
    n = start
    for _ in range(NEWTON_MAX_STEPS):
        step = (a * n ** 3 + b * n - c) / (3.0 * a * n * n + b)
        n -= step
        if abs(step) <= 1e-16 * max(abs(n), 1e-300):
            break
    return n


def background(params: SystemParams) -> CoherentBackground:
    """Coherent background from the closed-form root, polished on the cubic."""
    require_zero_detuning(params)
    if params.u == 0.0:
        linear = linear_steady_state(params)
        return CoherentBackground(alpha1=linear.alpha1, alpha2=linear.alpha2,
                                  alpha3=linear.alpha3, n2=linear.n2)

    a, b, c = cubic_coefficients(params)
    if c == 0.0:
        n2 = 0.0
    else:
        start = closed_form_occupation(params)
        if not np.isfinite(start) or start < 0.0:
            logger.debug("Closed-form root unusable, starting Newton from c/b", closed_form=start)
            start = c / b
        n2 = _newton_polish(params, start)
        if n2 < 0.0 or abs(cubic_residual(params, n2)) > CUBIC_RTOL * c:
            raise SolverDidNotConvergeError("background cubic root failed",
                                            n2=n2, residual=cubic_residual(params, n2))

    g, j, u = params.gamma, params.j, params.u
    alpha2 = 2.0 * j * params.omega * drive_interference(params.phi) / (g * g + 8.0 * j * j - 2j * u * n2 * g)
    alpha1, alpha3 = outer_amplitudes(params, alpha2)
    return CoherentBackground(alpha1=alpha1, alpha2=complex(alpha2), alpha3=alpha3, n2=n2)


def quadratic_matrices(params: SystemParams, bg: CoherentBackground):
    """K (Hermitian) and G (symmetric) of the fluctuation Hamiltonian."""
    k = hopping_matrix(params).astype(complex)
    k[1, 1] -= 2.0 * params.u * bg.n2
    g = np.zeros((3, 3), dtype=complex)
    g[1, 1] = -params.u * bg.alpha2 ** 2
    return k, g


def _commutation_matrix(n: int) -> np.ndarray:
    """P with P vec(X) = vec(X^T) for column-stacked n x n matrices."""
    perm = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            perm[i * n + j, j * n + i] = 1.0
    return perm


def _vec(x: np.ndarray) -> np.ndarray:
    return x.reshape(-1, order="F")


def moment_system(params: SystemParams, bg: CoherentBackground):
    """Linear system M x = rhs for x = [vec N, vec A, vec A*]."""
    k, g = quadratic_matrices(params, bg)
    n = k.shape[0]
    eye = np.eye(n)
    eye2 = np.eye(n * n)
    perm = _commutation_matrix(n)
    gamma = params.gamma
    gc = g.conj()

    left_k = np.kron(eye, k)
    right_k = np.kron(k.T, eye)

    # dN/dt = i(K* N - N K^T) + i(G* A - A* G) - gamma N
    row_n = np.hstack([
        1j * (np.kron(eye, k.conj()) - right_k) - gamma * eye2,
        1j * np.kron(eye, gc),
        -1j * np.kron(g.T, eye),
    ])
    # dA/dt = -i(K A + A K^T) - i(G N + (G N)^T) - i G - gamma A
    row_a = np.hstack([
        -1j * (eye2 + perm) @ np.kron(eye, g),
        -1j * (left_k + right_k) - gamma * eye2,
        np.zeros((n * n, n * n)),
    ])
    # conjugate of the A equation, with N* = N^T
    row_b = np.hstack([
        1j * (np.kron(eye, gc) @ perm + np.kron(gc.T, eye)),
        np.zeros((n * n, n * n)),
        1j * (np.kron(eye, k.conj()) + np.kron(k.conj().T, eye)) - gamma * eye2,
    ])
    matrix = np.vstack([row_n, row_a, row_b])
    rhs = np.concatenate([np.zeros(n * n), 1j * _vec(g), -1j * _vec(gc)])
    return matrix, rhs


def fluctuations(params: SystemParams, bg: CoherentBackground) -> FluctuationMoments:
    """Steady-state fluctuation moments of all three sites."""
    require_zero_detuning(params)
    matrix, rhs = moment_system(params, bg)
    try:
        x = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularMomentSystemError("fluctuation moment system is singular", reason=str(e))
    if not np.all(np.isfinite(x)):
        raise SingularMomentSystemError("fluctuation moment system produced non-finite moments")

    normal = x[:9].reshape((3, 3), order="F")
    anomalous = x[9:18].reshape((3, 3), order="F")
    normal = 0.5 * (normal + normal.conj().T)
    anomalous = 0.5 * (anomalous + anomalous.T)
    return FluctuationMoments(normal=normal, anomalous=anomalous)


def closed_form_fluctuation_number(u: float, j: float, gamma: float, n2: float) -> float:
    """<da2+ da2> in closed form at zero detuning."""
    x = (n2 * u) ** 2
    g2, j2 = gamma * gamma, j * j
    num = 2.0 * x * (g2 * g2 + 16.0 * j2 * j2 + 3.0 * g2 * (2.0 * j2 + x))
    den = (g2 + 3.0 * x) * (g2 * g2 + 64.0 * j2 * j2 + 4.0 * g2 * (4.0 * j2 + 3.0 * x))
    return num / den


def stability_spectrum(params: SystemParams, bg: CoherentBackground) -> np.ndarray:
    """Eigenvalues of the linear drift of (da, da+)."""
    require_zero_detuning(params)
    k, g = quadratic_matrices(params, bg)
    half = 0.5 * params.gamma * np.eye(3)
    drift = np.block([
        [-1j * k - half, -1j * g],
        [1j * g.conj(), 1j * k.conj() - half],
    ])
    return np.linalg.eigvals(drift)


def g2_zero(bg: CoherentBackground, moments: FluctuationMoments, floor: float = 1e-14) -> float:
    """Second-order expansion of g2(0) for the central cavity."""
    alpha = bg.alpha2
    n_bg = abs(alpha) ** 2
    if n_bg < floor:
        raise EmptyBackgroundError("coherent background of site 2 vanishes", n2=n_bg)
    nf = moments.nfluc(2)
    an = moments.anom(2)
    numerator = n_bg ** 2 + 4.0 * n_bg * nf + np.conj(alpha) ** 2 * an + alpha ** 2 * np.conj(an)
    denominator = n_bg ** 2 + 2.0 * n_bg * nf
    return float((numerator / denominator).real)


def validity_ratios(bg: CoherentBackground, moments: FluctuationMoments,
                    floor: float = 1e-14) -> Dict[str, float]:
    """r_k = <da_k+ da_k> / |alpha_k|^2 per site."""
    ratios = {}
    for site, occupation in enumerate(bg.occupations(), start=1):
        nf = moments.nfluc(site)
        if occupation >= floor:
            ratios[f"r{site}"] = nf / occupation
        else:
            ratios[f"r{site}"] = 0.0 if abs(nf) < floor else float("inf")
    return ratios


class BogoliubovBackend:
    """Linearized-fluctuation observables for the central cavity."""

    method = Method.BOGOLIUBOV

    def __init__(self, settings: Optional[SolverSettings] = None):
        self.settings = settings or SolverSettings()
        self.logger = get_logger("bogoliubov")

    def observables(self, params: SystemParams) -> ObservableRecord:
        start = time.perf_counter()
        bg = background(params)
        moments = fluctuations(params, bg)
        n2 = bg.n2 + moments.nfluc(2)

        ratios = validity_ratios(bg, moments, self.settings.background_floor)
        max_ratio = float(max(ratios.values()))
        diagnostics: Dict[str, Any] = dict(ratios)
        diagnostics["max_ratio"] = max_ratio
        diagnostics["valid"] = bool(max_ratio < self.settings.validity_ratio)
        diagnostics["background_n2"] = bg.n2

        g2 = None
        try:
            g2 = g2_zero(bg, moments, self.settings.background_floor)
        except EmptyBackgroundError as e:
            diagnostics["g2_undefined"] = type(e).__name__

        log_solver_run(self.logger, self.method.value, params.model_dump(), True,
                       (time.perf_counter() - start) * 1e3, n2=n2, max_ratio=max_ratio)
        return ObservableRecord.build(params, self.method, n2, g2, diagnostics)
