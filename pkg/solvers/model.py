"""
System parameters and the exact linear (U=0) steady state.

The linear solution is the common oracle every backend must reproduce when
the Kerr nonlinearity vanishes.
"""

import math
from typing import Any, Mapping, Tuple, Union

import numpy as np

from shared.errors import UnsupportedDetuningError
from shared.models import LinearSolution, SystemParams


def validate(params: Union[SystemParams, Mapping[str, Any]]) -> SystemParams:
    """Validate raw parameter values and wrap phi into [0, 2*pi)."""
    if isinstance(params, SystemParams):
        return SystemParams(**params.model_dump())
    return SystemParams(**dict(params))


def require_zero_detuning(params: SystemParams) -> None:
    if params.delta != 0.0:
        raise UnsupportedDetuningError(
            "closed-form backends require delta == 0", delta=params.delta
        )


def drive_interference(phi: float) -> complex:
    """The factor 1 + exp(i*phi) multiplying the drive seen by site 2.

    Returns exactly zero when cos(phi) == -1 so that destructive interference
    gives an exactly empty central cavity.
    """
    c = math.cos(phi)
    if 1.0 + c == 0.0:
        return 0j
    return complex(1.0 + c, math.sin(phi))


def outer_amplitudes(params: SystemParams, alpha2: complex) -> Tuple[complex, complex]:
    """alpha1 and alpha3 from the outer-site steady-state relations (delta = 0)."""
    g = params.gamma
    alpha1 = 1j * (2.0 * params.j * alpha2 - params.omega) / g
    alpha3 = 1j * (2.0 * params.j * alpha2 - params.omega * np.exp(1j * params.phi)) / g
    return complex(alpha1), complex(alpha3)


def linear_steady_state(params: SystemParams) -> LinearSolution:
    """Coherent amplitudes of the U=0 steady state.

    alpha2 = 2 J Omega (1 + e^{i phi}) / (gamma^2 + 8 J^2), which is real and
    nonnegative whenever 1 + e^{i phi} is.
    """
    require_zero_detuning(params)
    g, j = params.gamma, params.j
    alpha2 = 2.0 * j * params.omega * drive_interference(params.phi) / (g * g + 8.0 * j * j)
    alpha1, alpha3 = outer_amplitudes(params, alpha2)
    return LinearSolution(alpha1=alpha1, alpha2=complex(alpha2), alpha3=alpha3)


def linear_occupation(params: SystemParams) -> float:
    """n2 = 8 J^2 Omega^2 (1 + cos phi) / (gamma^2 + 8 J^2)^2."""
    g, j = params.gamma, params.j
    return 8.0 * j * j * params.omega ** 2 * (1.0 + math.cos(params.phi)) / (g * g + 8.0 * j * j) ** 2


def mean_field_drift(params: SystemParams, alpha1: complex, alpha2: complex,
                     alpha3: complex) -> np.ndarray:
    """Time derivatives of the classical amplitudes; zero at a steady state."""
    g, j, u, d = params.gamma, params.j, params.u, params.delta
    drive3 = params.omega * np.exp(1j * params.phi) / 2.0
    d1 = -1j * (d * alpha1 - j * alpha2 + params.omega / 2.0) - 0.5 * g * alpha1
    d2 = -1j * (d * alpha2 - u * abs(alpha2) ** 2 * alpha2 - j * (alpha1 + alpha3)) - 0.5 * g * alpha2
    d3 = -1j * (d * alpha3 - j * alpha2 + drive3) - 0.5 * g * alpha3
    return np.array([d1, d2, d3], dtype=complex)


def hopping_matrix(params: SystemParams) -> np.ndarray:
    """Single-particle Hamiltonian of the linear chain."""
    d, j = params.delta, params.j
    return np.array([[d, -j, 0.0],
                     [-j, d, -j],
                     [0.0, -j, d]], dtype=float)


def bloch_frequencies(params: SystemParams) -> np.ndarray:
    """Bloch-mode frequencies delta - sqrt(2) J, delta, delta + sqrt(2) J."""
    return np.linalg.eigvalsh(hopping_matrix(params))
