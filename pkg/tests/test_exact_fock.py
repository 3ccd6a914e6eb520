"""
Tests for the truncated-Fock backend.
"""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from shared.config import SolverSettings
from shared.errors import (
    CutoffTooSmallError,
    DegenerateNullSpaceError,
    EmptyCavityError,
    FeasibilityError,
    ParameterError,
)
from shared.models import Method, SystemParams
from solvers.exact_fock import (
    DensityMatrix,
    ExactFockBackend,
    FockSpace,
    Liouvillian,
    annihilation,
    build_hamiltonian,
    build_liouvillian,
    check_feasibility,
    correlation_amplitude,
    cutoff_scan,
    embed_state,
    estimate_nonzeros,
    g2_from_state,
    g2_tau,
    hermiticity_error,
    lindblad_superoperator,
    liouvillian_spectrum,
    number_operator,
    occupation,
    propagate,
    steady_state,
    unvec,
    vec,
)
from solvers.model import linear_occupation


def basis_state(space: FockSpace, n1: int, n2: int, n3: int) -> DensityMatrix:
    levels = space.levels
    index = (n1 * levels + n2) * levels + n3
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[index, index] = 1.0
    return DensityMatrix(rho=rho)


class TestFockSpace:
    def test_dimension(self):
        assert FockSpace(cutoff=2).dim == 27

    def test_cutoff_too_small(self):
        with pytest.raises(CutoffTooSmallError):
            FockSpace(cutoff=0)

    def test_site_out_of_range(self):
        with pytest.raises(ParameterError):
            annihilation(FockSpace(cutoff=1), 4)

    def test_commutator_below_top_level(self):
        space = FockSpace(cutoff=3)
        a = annihilation(space, 2)
        commutator = (a @ a.conj().T - a.conj().T @ a).toarray()
        n2 = number_operator(space, 2).diagonal().real
        below = n2 < space.cutoff
        assert np.allclose(np.diag(commutator)[below], 1.0)
        assert np.allclose(commutator - np.diag(np.diag(commutator)), 0.0)

    def test_vec_round_trip_is_column_stacking(self):
        x = np.arange(9, dtype=complex).reshape(3, 3)
        assert np.array_equal(vec(x)[:3], x[:, 0])
        assert np.array_equal(unvec(vec(x), 3), x)


class TestHamiltonian:
    def test_hermitian(self):
        params = SystemParams(u=2.0, j=1.0, omega=1.5, phi=0.7, delta=0.3)
        assert hermiticity_error(build_hamiltonian(params, FockSpace(cutoff=3))) < 1e-14

    def test_zero_parameters_give_zero(self):
        h = build_hamiltonian(SystemParams(), FockSpace(cutoff=2))
        assert abs(h).max() == 0.0

    def test_single_excitation_spectrum(self):
        h = build_hamiltonian(SystemParams(j=1.0), FockSpace(cutoff=1)).toarray()
        eigenvalues = np.linalg.eigvalsh(h)
        for expected in (-math.sqrt(2), 0.0, math.sqrt(2)):
            assert np.min(np.abs(eigenvalues - expected)) < 1e-12


class TestLiouvillian:
    def test_vacuum_is_null_without_drive(self):
        space = FockSpace(cutoff=2)
        liouvillian = build_liouvillian(SystemParams(u=1.0, j=1.0), space)
        vacuum = basis_state(space, 0, 0, 0).rho
        assert np.max(np.abs(liouvillian.apply(vacuum))) < 1e-14

    def test_spectrum_is_dissipative(self):
        liouvillian = build_liouvillian(SystemParams(u=1.0, j=1.0, omega=0.5), FockSpace(cutoff=2))
        eigenvalues = liouvillian_spectrum(liouvillian)
        assert np.max(eigenvalues.real) < 1e-10

    def test_spectrum_refuses_large_spaces(self):
        liouvillian = build_liouvillian(SystemParams(j=1.0), FockSpace(cutoff=4))
        with pytest.raises(FeasibilityError):
            liouvillian_spectrum(liouvillian)

    def test_trace_preserving_columns(self):
        liouvillian = build_liouvillian(SystemParams(u=0.5, j=1.0, omega=1.0), FockSpace(cutoff=2))
        dim = liouvillian.dim
        trace_row = vec(np.eye(dim)).conj()
        assert np.max(np.abs(liouvillian.superop.T @ trace_row)) < 1e-12


class TestSteadyState:
    def test_vacuum_without_drive(self):
        space = FockSpace(cutoff=2)
        state = steady_state(build_liouvillian(SystemParams(u=1.0, j=1.0), space))
        assert state.rho[0, 0].real == pytest.approx(1.0, abs=1e-10)
        assert occupation(state, space) < 1e-12

    def test_physical_state(self, settings):
        space = FockSpace(cutoff=3)
        liouvillian = build_liouvillian(SystemParams(u=2.0, j=2.0, omega=1.0), space)
        state = steady_state(liouvillian, settings)
        assert state.trace() == pytest.approx(1.0, abs=1e-12)
        assert state.hermiticity_error() < 1e-12
        assert state.min_eigenvalue() > -1e-8
        assert state.residual <= settings.steady_residual_tol * liouvillian.norm_max()

    def test_dense_and_sparse_paths_agree(self):
        params = SystemParams(u=1.0, j=1.0, omega=0.7, phi=0.4)
        space = FockSpace(cutoff=2)
        liouvillian = build_liouvillian(params, space)
        dense = steady_state(liouvillian, SolverSettings(dense_cutoff=2))
        sparse = steady_state(liouvillian, SolverSettings(dense_cutoff=0))
        assert np.max(np.abs(dense.rho - sparse.rho)) < 1e-10

    def test_iterative_and_direct_paths_agree(self, settings):
        space = FockSpace(cutoff=3)
        liouvillian = build_liouvillian(SystemParams(u=2.0, j=1.0, omega=1.0, phi=0.3), space)
        direct = steady_state(liouvillian, settings)
        iterative = steady_state(liouvillian, SolverSettings(direct_max_cutoff=2))
        assert np.max(np.abs(direct.rho - iterative.rho)) < 1e-9
        assert iterative.residual <= settings.steady_residual_tol * liouvillian.norm_max()

    def test_warm_start_gives_the_same_state(self, settings):
        params = SystemParams(u=2.0, j=1.0, omega=1.0)
        lower = steady_state(build_liouvillian(params, FockSpace(cutoff=3)), settings)
        space = FockSpace(cutoff=4)
        liouvillian = build_liouvillian(params, space)
        cold = steady_state(liouvillian, settings)
        warm = steady_state(liouvillian, settings, guess=embed_state(lower, space))
        assert np.max(np.abs(cold.rho - warm.rho)) < 1e-9

    def test_embedding_keeps_occupations(self, settings):
        params = SystemParams(u=1.0, j=0.5, omega=0.5)
        small = FockSpace(cutoff=2)
        state = steady_state(build_liouvillian(params, small), settings)
        large = FockSpace(cutoff=4)
        embedded = embed_state(state, large)
        assert embedded.trace() == pytest.approx(1.0, abs=1e-12)
        for site in (1, 2, 3):
            assert occupation(embedded, large, site) == pytest.approx(occupation(state, small, site), abs=1e-14)

    def test_embedding_needs_a_larger_space(self, settings):
        state = steady_state(build_liouvillian(SystemParams(j=1.0, omega=0.5), FockSpace(cutoff=3)), settings)
        with pytest.raises(ParameterError):
            embed_state(state, FockSpace(cutoff=2))

    def test_linear_limit(self):
        params = SystemParams(u=0.0, j=1.0, omega=0.1)
        space = FockSpace(cutoff=3)
        n2 = occupation(steady_state(build_liouvillian(params, space)), space)
        assert n2 == pytest.approx(linear_occupation(params), rel=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("omega", [0.1, 0.2])
    def test_linear_limit_at_default_cutoff(self, omega):
        params = SystemParams(u=0.0, j=1.0, omega=omega)
        space = FockSpace(cutoff=5)
        n2 = occupation(steady_state(build_liouvillian(params, space)), space)
        assert n2 == pytest.approx(linear_occupation(params), rel=1e-6)

    @pytest.mark.slow
    def test_destructive_interference_empties_center(self):
        params = SystemParams(u=2.0, j=2.0, omega=1.0, phi=math.pi)
        space = FockSpace(cutoff=5)
        assert occupation(steady_state(build_liouvillian(params, space)), space) < 1e-6

    def test_degenerate_null_space(self):
        space = FockSpace(cutoff=1)
        superop = lindblad_superoperator(number_operator(space, 2), [], 1.0)
        liouvillian = Liouvillian(superop=superop, space=space, params=SystemParams())
        with pytest.raises(DegenerateNullSpaceError):
            steady_state(liouvillian)

    def test_fixed_point_of_evolution(self, settings):
        space = FockSpace(cutoff=3)
        liouvillian = build_liouvillian(SystemParams(u=2.0, j=2.0, omega=1.0), space)
        state = steady_state(liouvillian, settings)
        evolved = propagate(liouvillian, state, 10.0, settings)
        assert np.max(np.abs(evolved.rho - state.rho)) < 1e-6


class TestPropagate:
    def test_zero_delay_is_identity(self):
        space = FockSpace(cutoff=1)
        liouvillian = build_liouvillian(SystemParams(j=1.0, omega=1.0), space)
        state = basis_state(space, 0, 1, 0)
        assert np.array_equal(propagate(liouvillian, state, 0.0).rho, state.rho)

    def test_negative_delay(self):
        space = FockSpace(cutoff=1)
        liouvillian = build_liouvillian(SystemParams(j=1.0), space)
        with pytest.raises(ParameterError):
            propagate(liouvillian, basis_state(space, 0, 0, 0), -1.0)

    @pytest.mark.parametrize("tau", [0.5, 1.0, 3.0])
    def test_free_decay(self, tau):
        space = FockSpace(cutoff=1)
        liouvillian = build_liouvillian(SystemParams(), space)
        evolved = propagate(liouvillian, basis_state(space, 0, 1, 0), tau)
        assert occupation(evolved, space) == pytest.approx(math.exp(-tau), abs=1e-6)

    def test_trace_preserved_for_non_state(self):
        space = FockSpace(cutoff=2)
        liouvillian = build_liouvillian(SystemParams(u=1.0, j=1.0, omega=0.8), space)
        a = annihilation(space, 2).toarray()
        start = basis_state(space, 1, 2, 0).rho
        sigma = DensityMatrix(rho=a @ start @ a.conj().T)
        evolved = propagate(liouvillian, sigma, 2.0)
        assert evolved.trace() == pytest.approx(sigma.trace(), abs=1e-8)


class TestCorrelations:
    def test_coherent_light_without_nonlinearity(self):
        params = SystemParams(u=0.0, j=1.0, omega=0.2)
        curve = dict(g2_tau(params, FockSpace(cutoff=4), [0.0, 0.5, 1.0, 2.0, 5.0]))
        assert curve[0.0] == pytest.approx(1.0, abs=1e-6)
        for g2 in curve.values():
            assert g2 == pytest.approx(1.0, abs=1e-4)

    def test_curve_keeps_requested_order(self):
        params = SystemParams(u=1.0, j=1.0, omega=0.5)
        curve = g2_tau(params, FockSpace(cutoff=2), [2.0, 0.0, 1.0])
        assert [tau for tau, _ in curve] == [2.0, 0.0, 1.0]

    def test_zero_delay_matches_steady_state(self, settings):
        params = SystemParams(u=2.0, j=1.0, omega=0.8)
        space = FockSpace(cutoff=3)
        state = steady_state(build_liouvillian(params, space), settings)
        (_, g2), = g2_tau(params, space, [0.0], settings)
        assert g2 == pytest.approx(g2_from_state(state, space), rel=1e-8)

    def test_empty_cavity(self):
        with pytest.raises(EmptyCavityError):
            g2_tau(SystemParams(u=1.0, j=1.0), FockSpace(cutoff=1), [0.0, 1.0])

    def test_correlation_amplitude(self):
        curve = [(0.0, 0.2), (1.0, 1.3), (2.0, 0.9), (3.0, 1.05)]
        assert correlation_amplitude(curve) == pytest.approx(0.8)
        assert correlation_amplitude(curve, tau_min=1.0) == pytest.approx(0.3)
        assert correlation_amplitude(curve, tau_min=10.0) == 0.0

    @pytest.mark.slow
    def test_antibunching_and_relaxation(self):
        taus = [0.0, 10.0]
        curves = {
            j: dict(g2_tau(SystemParams(u=2.0, j=j, omega=1.0), FockSpace(cutoff=5), taus))
            for j in (2.0, 4.0)
        }
        for curve in curves.values():
            assert curve[0.0] < 1.0
            assert abs(curve[10.0] - 1.0) < 0.05
        assert curves[2.0][0.0] < curves[4.0][0.0]


class TestFeasibility:
    def test_nonzero_estimate(self):
        assert estimate_nonzeros(5) == 21 * 6 ** 6

    def test_entry_guard_cannot_be_forced(self, settings):
        with pytest.raises(FeasibilityError):
            check_feasibility(40, settings, force=True)

    def test_budget_can_be_forced(self, settings):
        with pytest.raises(FeasibilityError):
            check_feasibility(12, settings)
        check_feasibility(12, settings, force=True)

    def test_default_cutoff_is_feasible(self, settings):
        check_feasibility(settings.default_cutoff, settings)

    def test_preconditioner_fill_budget(self, settings):
        check_feasibility(7, settings)
        with pytest.raises(FeasibilityError) as info:
            check_feasibility(8, settings)
        assert "factor_nonzeros" in info.value.to_dict()
        check_feasibility(8, settings, force=True)

    def test_zero_cutoff(self, settings):
        with pytest.raises(CutoffTooSmallError):
            check_feasibility(0, settings)
        with pytest.raises(CutoffTooSmallError):
            ExactFockBackend(settings, cutoff=0).observables(SystemParams(j=1.0, omega=1.0))

    def test_backend_checks_before_building(self, settings):
        backend = ExactFockBackend(settings, cutoff=40)
        with pytest.raises(FeasibilityError) as info:
            backend.observables(SystemParams(j=1.0, omega=1.0))
        assert info.value.code == 4


class TestBackend:
    def test_record(self, settings):
        params = SystemParams(u=2.0, j=2.0, omega=1.0)
        record = ExactFockBackend(settings, cutoff=3).observables(params)
        assert record.method == Method.EXACT_FOCK
        assert record.output_flux == params.gamma * record.n2
        assert record.g2_zero is not None and record.g2_zero < 1.0
        assert record.diagnostics["cutoff"] == 3
        assert record.diagnostics["convergence_delta"] >= 0.0

    def test_convergence_check_can_be_skipped(self):
        settings = SolverSettings(convergence_check=False)
        record = ExactFockBackend(settings, cutoff=3).observables(SystemParams(u=2.0, j=2.0, omega=1.0))
        assert "convergence_delta" not in record.diagnostics

    def test_convergence_delta_matches_scan(self, settings):
        params = SystemParams(u=2.0, j=2.0, omega=1.0)
        record = ExactFockBackend(settings, cutoff=4).observables(params)
        _, top = cutoff_scan(params, [3, 4], settings)
        assert record.n2 == pytest.approx(top["n2"], rel=1e-9)
        assert record.diagnostics["convergence_delta"] == pytest.approx(top["delta"], rel=1e-6, abs=1e-12)

    def test_empty_cavity_record(self, settings):
        record = ExactFockBackend(settings, cutoff=2).observables(SystemParams(u=1.0, j=1.0))
        assert record.g2_zero is None
        assert record.diagnostics["g2_undefined"] == "EmptyCavityError"

    def test_cutoff_scan(self, settings):
        rows = cutoff_scan(SystemParams(u=2.0, j=2.0, omega=1.0), [4, 3], settings)
        assert [row["cutoff"] for row in rows] == [3, 4]
        assert math.isnan(rows[0]["delta"])
        assert rows[1]["delta"] < 0.01

    @pytest.mark.slow
    def test_cutoff_convergence(self, settings):
        params = SystemParams(u=2.0, j=2.0, omega=1.0)
        low, high = cutoff_scan(params, [5, 6], settings)
        assert high["n2"] == pytest.approx(low["n2"], rel=1e-4)


def test_number_operator_is_diagonal():
    op = number_operator(FockSpace(cutoff=2), 1)
    assert sp.issparse(op)
    assert abs(op - sp.diags(op.diagonal())).max() == 0.0
