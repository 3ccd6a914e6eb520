"""
Tests for the P-function mean-field backend.
"""

import math

import numpy as np
import pytest

from shared.config import SolverSettings
from shared.errors import EmptyCavityError, UnsupportedDetuningError
from shared.models import Method, SystemParams
from solvers.exact_fock import converged_single_site_moments
from solvers.model import linear_occupation
from solvers.pmf import (
    EffectiveDrive,
    MomentTable,
    PMeanFieldBackend,
    effective_drive,
    kerr_mean,
    kerr_moments,
    mean_field_map,
    moments,
    solve_self_consistent,
)


class TestKerrMoments:
    def test_undriven_cavity(self):
        table = kerr_moments(0j, 2.0, 1.0, max_order=2)
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        assert np.array_equal(table.values, expected)

    def test_structure(self):
        values = kerr_moments(1.3 - 0.6j, 1.7, 1.0, max_order=3).values
        assert np.max(np.abs(values - values.conj().T)) < 1e-12
        assert np.all(np.diag(values).imag == 0.0)
        assert values[1, 1].real > 0.0

    def test_linear_cavity_is_coherent(self):
        table = kerr_moments(0.8j, 0.0, 1.0, max_order=2)
        beta = 0.8
        assert table.n2 == pytest.approx(beta ** 2, rel=1e-14)
        assert table.get(2, 2) == pytest.approx(beta ** 4, rel=1e-14)
        assert kerr_mean(0.8j, 0.0, 1.0) == pytest.approx(0.8)

    def test_single_site_truncated_fock(self):
        drive, u, gamma = 2.0, 2.0, 1.0
        table = kerr_moments(drive, u, gamma, max_order=2)
        oracle, _ = converged_single_site_moments(drive, u, gamma, max_order=2)
        assert np.max(np.abs(table.values - oracle)) <= 1e-8 * np.max(np.abs(oracle))

    def test_random_drives_match_truncated_fock(self, rng):
        for _ in range(20):
            drive = 3.0 * rng.uniform(0.0, 1.0) * np.exp(1j * rng.uniform(0.0, 2 * math.pi))
            u = rng.uniform(0.1, 5.0)
            table = kerr_moments(drive, u, 1.0, max_order=2)
            oracle, _ = converged_single_site_moments(drive, u, 1.0, max_order=2)
            scale = np.maximum(np.abs(oracle), 1e-12)
            assert np.max(np.abs(table.values - oracle) / scale) < 1e-7

    def test_blockade_grows_with_nonlinearity(self):
        values = [kerr_moments(1.0, u, 1.0).g2_zero() for u in (1.0, 2.0, 4.0, 7.0, 10.0)]
        assert all(later < earlier for earlier, later in zip(values, values[1:]))

    def test_empty_table_has_undefined_g2(self):
        with pytest.raises(EmptyCavityError):
            MomentTable(values=np.diag([1.0, 0.0, 0.0]).astype(complex)).g2_zero()


class TestSelfConsistency:
    def test_decoupled_center_is_empty(self):
        drive, mean_a2 = solve_self_consistent(SystemParams(u=1.0, j=0.0, omega=2.0))
        assert drive.omega_tilde == 0j
        assert mean_a2 == 0j

    def test_destructive_interference(self):
        drive, mean_a2 = solve_self_consistent(SystemParams(u=1.0, j=0.3, omega=2.0, phi=math.pi))
        assert drive.omega_tilde == 0j
        assert mean_a2 == 0j

    def test_fixed_point(self, settings):
        params = SystemParams(u=0.5, j=0.1, omega=5.0)
        drive, mean_a2 = solve_self_consistent(params, settings)
        assert abs(mean_a2 - mean_field_map(params, mean_a2)) <= 1e-10 * (1 + abs(mean_a2))
        assert drive.omega_tilde == pytest.approx(effective_drive(params, mean_a2), rel=1e-14)

    def test_mean_matches_single_site_oracle(self, settings):
        params = SystemParams(u=0.5, j=0.1, omega=5.0)
        drive, mean_a2 = solve_self_consistent(params, settings)
        oracle, _ = converged_single_site_moments(drive.omega_tilde, params.u, params.gamma, max_order=1)
        assert mean_a2 == pytest.approx(oracle[0, 1], rel=1e-7)

    def test_damping_variants_agree(self):
        params = SystemParams(u=0.5, j=0.1, omega=5.0)
        _, first = solve_self_consistent(params, SolverSettings(pmf_damping=0.5))
        _, second = solve_self_consistent(params, SolverSettings(pmf_damping=0.2))
        assert first == pytest.approx(second, abs=1e-8)

    def test_detuning_rejected(self):
        with pytest.raises(UnsupportedDetuningError):
            solve_self_consistent(SystemParams(u=1.0, j=0.1, omega=1.0, delta=0.1))


class TestBackend:
    def test_linear_limit(self, settings):
        params = SystemParams(u=0.0, j=1.0, omega=1.0)
        record = PMeanFieldBackend(settings).observables(params)
        assert record.method == Method.P_MEAN_FIELD
        assert record.n2 == pytest.approx(16.0 / 81.0, rel=1e-12)
        assert record.g2_zero == 1.0

    def test_weak_nonlinearity(self, settings):
        params = SystemParams(u=1e-4, j=0.2, omega=5.0)
        record = PMeanFieldBackend(settings).observables(params)
        assert record.n2 == pytest.approx(linear_occupation(params), rel=1e-3)

    def test_interference_null(self, settings):
        record = PMeanFieldBackend(settings).observables(SystemParams(u=0.5, j=1.0, omega=3.0, phi=math.pi))
        assert record.n2 == 0.0
        assert record.g2_zero is None
        assert record.diagnostics["g2_undefined"] == "EmptyCavityError"

    def test_phase_scan(self, settings):
        backend = PMeanFieldBackend(settings)
        phases = np.linspace(0.0, 2 * math.pi, 17)
        values = [backend.observables(SystemParams(u=0.5, j=0.1, omega=5.0, phi=phi)).n2 for phi in phases]
        assert values[8] == 0.0
        assert int(np.argmax(values)) in (0, 16)
        assert values[0] == pytest.approx(values[16], rel=1e-12)

    def test_antibunching_is_not_monotone_in_tunneling(self, settings):
        backend = PMeanFieldBackend(settings)
        j_values = np.linspace(0.2, 1.8, 17)
        g2 = [backend.observables(SystemParams(u=2.0, j=j, omega=5.0)).g2_zero for j in j_values]
        slopes = np.sign(np.diff(g2))
        turns = np.flatnonzero(slopes[:-1] != slopes[1:])
        assert len(turns) >= 1
        turn = j_values[turns[0] + 1]
        assert 0.5 < turn < 1.8

    def test_diagnostics(self, settings):
        record = PMeanFieldBackend(settings).observables(SystemParams(u=2.0, j=0.2, omega=1.0))
        diagnostics = record.diagnostics
        assert diagnostics["converged"] is True
        assert diagnostics["small_j"] is True
        assert diagnostics["residual"] <= settings.pmf_tol * (1 + math.sqrt(record.n2))
        assert 0.0 < record.g2_zero < 1.0

    def test_large_tunneling_is_outside_small_j(self, settings):
        record = PMeanFieldBackend(settings).observables(SystemParams(u=2.0, j=2.0, omega=1.0))
        assert record.diagnostics["small_j"] is False

    def test_moments_from_drive(self):
        params = SystemParams(u=1.5, j=0.2, omega=1.0)
        table = moments(params, EffectiveDrive(omega_tilde=1.2 + 0.4j))
        assert table.values == pytest.approx(kerr_moments(1.2 + 0.4j, 1.5, 1.0).values)
