"""
Quick invariant checks over every backend, runnable from the CLI.
"""

import math
from typing import Callable, List, TextIO, Tuple

import numpy as np
import structlog

from shared.config import SolverSettings
from shared.models import SystemParams
from solvers import bogoliubov, exact_fock, pmf
from solvers.model import linear_occupation, linear_steady_state, mean_field_drift
from solvers.special_functions import complex_gamma, hyper_0f2

logger = structlog.get_logger("selftest")


def check_linear_solution(settings: SolverSettings) -> None:
    params = SystemParams(u=0.0, j=1.3, omega=0.8, phi=0.7)
    lin = linear_steady_state(params)
    residual = np.max(np.abs(mean_field_drift(params, lin.alpha1, lin.alpha2, lin.alpha3)))
    assert residual < 1e-12, f"linear residual {residual}"
    assert abs(lin.n2 - linear_occupation(params)) < 1e-14


def check_linear_limit(settings: SolverSettings) -> None:
    params = SystemParams(u=0.0, j=1.0, omega=0.1)
    expected = linear_occupation(params)
    records = [
        exact_fock.ExactFockBackend(settings, cutoff=3).observables(params),
        bogoliubov.BogoliubovBackend(settings).observables(params),
        pmf.PMeanFieldBackend(settings).observables(params),
    ]
    for record in records:
        assert abs(record.n2 - expected) <= 1e-6 * expected, f"{record.method.value}: {record.n2}"


def check_interference_null(settings: SolverSettings) -> None:
    params = SystemParams(u=0.5, j=1.0, omega=3.0, phi=math.pi)
    assert bogoliubov.BogoliubovBackend(settings).observables(params).n2 == 0.0
    assert pmf.PMeanFieldBackend(settings).observables(params).n2 == 0.0


def check_bogoliubov_closed_forms(settings: SolverSettings) -> None:
    params = SystemParams(u=0.2, j=1.0, omega=5.0)
    bg = bogoliubov.background(params)
    a, b, c = bogoliubov.cubic_coefficients(params)
    roots = np.roots([a, 0.0, b, -c])
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and r.real >= 0.0]
    assert len(real) == 1 and abs(bg.n2 - real[0]) <= 1e-9 * real[0]
    moments = bogoliubov.fluctuations(params, bg)
    printed = bogoliubov.closed_form_fluctuation_number(params.u, params.j, params.gamma, bg.n2)
    assert abs(moments.nfluc(2) - printed) <= 1e-9 * printed


def check_stability(settings: SolverSettings) -> None:
    params = SystemParams(u=0.3, j=2.0, omega=4.0, phi=1.0)
    spectrum = bogoliubov.stability_spectrum(params, bogoliubov.background(params))
    assert np.max(np.abs(spectrum.real + 0.5 * params.gamma)) < 1e-10


def check_special_functions(settings: SolverSettings) -> None:
    assert abs(complex_gamma(5) - 24.0) < 1e-12
    assert abs(abs(complex_gamma(1j)) ** 2 - math.pi / math.sinh(math.pi)) < 1e-12
    direct = sum(1.0 / math.factorial(n) ** 3 for n in range(50))
    assert abs(hyper_0f2(1, 1, 1.0) - direct) < 1e-14


def check_kerr_moments(settings: SolverSettings) -> None:
    drive, u, gamma = 1.2 + 0.4j, 1.5, 1.0
    table = pmf.kerr_moments(drive, u, gamma, max_order=2)
    oracle, _ = exact_fock.converged_single_site_moments(drive, u, gamma, max_order=2)
    assert np.max(np.abs(table.values - oracle) / np.maximum(np.abs(oracle), 1e-12)) < 1e-7


def check_trace_preservation(settings: SolverSettings) -> None:
    params = SystemParams(u=1.0, j=0.5, omega=0.5)
    space = exact_fock.FockSpace(cutoff=2)
    liouvillian = exact_fock.build_liouvillian(params, space)
    rho0 = np.zeros((space.dim, space.dim), dtype=complex)
    rho0[0, 0] = 1.0
    evolved = exact_fock.propagate(liouvillian, exact_fock.DensityMatrix(rho=rho0), 1.5, settings)
    assert abs(evolved.trace() - 1.0) < 1e-8


CHECKS: List[Tuple[str, Callable[[SolverSettings], None]]] = [
    ("linear-solution", check_linear_solution),
    ("linear-limit", check_linear_limit),
    ("interference-null", check_interference_null),
    ("bogoliubov-closed-forms", check_bogoliubov_closed_forms),
    ("stability-spectrum", check_stability),
    ("special-functions", check_special_functions),
    ("kerr-moments", check_kerr_moments),
    ("trace-preservation", check_trace_preservation),
]


def run_selftest(settings: SolverSettings, stream: TextIO) -> int:
    """Print PASS/FAIL per check; exit code 0 only if every check passes."""
    failures = 0
    for name, check in CHECKS:
        try:
            check(settings)
            stream.write(f"PASS {name}\n")
        except Exception as e:
            failures += 1
            logger.error("Self-test check failed", check=name, error=str(e))
            stream.write(f"FAIL {name}: {type(e).__name__}: {e}\n")
    stream.write(f"{len(CHECKS) - failures}/{len(CHECKS)} checks passed\n")
    return 0 if failures == 0 else 3
