"""
Tests for the Bogoliubov backend: background cubic, fluctuation moments,
stability spectrum and g2(0).
"""

import math

import numpy as np
import pytest
from scipy import optimize

from shared.errors import EmptyBackgroundError, UnsupportedDetuningError
from shared.models import Method, SystemParams
from solvers.bogoliubov import (
    BogoliubovBackend,
    background,
    closed_form_fluctuation_number,
    closed_form_occupation,
    cubic_coefficients,
    cubic_residual,
    fluctuations,
    g2_zero,
    stability_spectrum,
    validity_ratios,
)
from solvers.model import bloch_frequencies, linear_occupation, mean_field_drift


def random_params(rng, omega_max=20.0, u_max=0.5, j_max=4.0, phi=None):
    return SystemParams(
        u=rng.uniform(1e-2, u_max),
        j=rng.uniform(0.05, j_max),
        omega=rng.uniform(0.1, omega_max),
        phi=rng.uniform(0.0, 2 * math.pi) if phi is None else phi,
    )


def bracketed_root(params: SystemParams) -> float:
    a, b, c = cubic_coefficients(params)
    return optimize.brentq(lambda n: a * n ** 3 + b * n - c, 0.0, c / b, xtol=1e-300, rtol=1e-15)


class TestBackground:
    def test_companion_matrix_root(self):
        params = SystemParams(u=0.2, j=1.0, omega=5.0)
        a, b, c = cubic_coefficients(params)
        roots = np.roots([a, 0.0, b, -c])
        real = [r.real for r in roots if abs(r.imag) < 1e-9]
        assert len(real) == 1
        assert background(params).n2 == pytest.approx(real[0], rel=1e-9)

    def test_closed_form_is_near_the_root(self):
        params = SystemParams(u=0.2, j=1.0, omega=5.0)
        assert closed_form_occupation(params) == pytest.approx(background(params).n2, rel=1e-6)

    def test_random_points_match_bracketed_root(self, rng):
        for _ in range(100):
            params = random_params(rng)
            bg = background(params)
            if bg.n2 == 0.0:
                continue
            assert bg.n2 == pytest.approx(bracketed_root(params), rel=1e-9)
            a, b, c = cubic_coefficients(params)
            assert abs(cubic_residual(params, bg.n2)) <= 1e-10 * c

    def test_amplitudes_solve_classical_equations(self, rng):
        for _ in range(50):
            params = random_params(rng)
            bg = background(params)
            assert abs(bg.alpha2) ** 2 == pytest.approx(bg.n2, rel=1e-9, abs=1e-15)
            drift = mean_field_drift(params, bg.alpha1, bg.alpha2, bg.alpha3)
            scale = params.gamma * max(abs(bg.alpha1), abs(bg.alpha2), abs(bg.alpha3))
            assert np.max(np.abs(drift)) <= 1e-8 * scale

    def test_destructive_interference(self):
        params = SystemParams(u=0.5, j=1.0, omega=5.0, phi=math.pi)
        bg = background(params)
        assert bg.n2 == 0.0
        assert bg.alpha2 == 0j
        assert bg.alpha1 == pytest.approx(-5.0j)
        assert bg.alpha3 == pytest.approx(5.0j)

    def test_vanishing_nonlinearity(self):
        params = SystemParams(u=1e-6, j=1.0, omega=1.0)
        assert background(params).n2 == pytest.approx(16.0 / 81.0, rel=1e-6)

    def test_zero_nonlinearity_is_linear(self):
        params = SystemParams(u=0.0, j=1.3, omega=2.0, phi=0.3)
        assert background(params).n2 == pytest.approx(linear_occupation(params), rel=1e-14)

    def test_detuning_rejected(self):
        with pytest.raises(UnsupportedDetuningError):
            background(SystemParams(u=0.1, j=1.0, omega=1.0, delta=0.2))


class TestFluctuations:
    def test_closed_form_site_two(self, rng):
        for _ in range(100):
            params = random_params(rng)
            bg = background(params)
            printed = closed_form_fluctuation_number(params.u, params.j, params.gamma, bg.n2)
            assert fluctuations(params, bg).nfluc(2) == pytest.approx(printed, rel=1e-9, abs=1e-300)

    def test_decoupled_limit(self):
        n, u = 3.0, 0.4
        x = (n * u) ** 2
        assert closed_form_fluctuation_number(u, 0.0, 1.0, n) == pytest.approx(
            2 * x / (1 + 12 * x), rel=1e-14)

    def test_strong_tunneling_limit(self):
        n, u = 2.0, 0.3
        x = (n * u) ** 2
        assert closed_form_fluctuation_number(u, 1e6, 1.0, n) == pytest.approx(
            x / (2 * (1 + 3 * x)), rel=1e-6)

    def test_linear_system_has_no_fluctuations(self):
        params = SystemParams(u=0.0, j=1.0, omega=2.0)
        moments = fluctuations(params, background(params))
        assert np.max(np.abs(moments.normal)) == 0.0
        assert np.max(np.abs(moments.anomalous)) == 0.0

    def test_moments_are_physical(self, rng):
        for _ in range(50):
            params = random_params(rng)
            moments = fluctuations(params, background(params))
            assert np.max(np.abs(moments.normal - moments.normal.conj().T)) < 1e-12
            for site in (1, 2, 3):
                nf = moments.nfluc(site)
                assert nf >= -1e-14
                assert abs(moments.anom(site)) ** 2 <= nf * (nf + 1) * (1 + 1e-9) + 1e-14


class TestStability:
    def test_uniform_decay(self, rng):
        for _ in range(100):
            params = random_params(rng)
            spectrum = stability_spectrum(params, background(params))
            assert np.max(np.abs(spectrum.real + 0.5 * params.gamma)) < 1e-10

    def test_linear_spectrum_is_bloch(self):
        params = SystemParams(u=0.0, j=1.5, omega=1.0)
        spectrum = stability_spectrum(params, background(params))
        frequencies = np.sort(np.concatenate([bloch_frequencies(params), -bloch_frequencies(params)]))
        assert np.sort(spectrum.imag) == pytest.approx(frequencies, abs=1e-12)
        assert spectrum.real == pytest.approx(np.full(6, -0.5), abs=1e-12)

    def test_decoupled_sites(self):
        params = SystemParams(u=0.5, j=0.0, omega=3.0)
        spectrum = stability_spectrum(params, background(params))
        assert spectrum.real == pytest.approx(np.full(6, -0.5), abs=1e-12)


class TestObservables:
    def test_linear_limit(self, settings):
        params = SystemParams(u=0.0, j=1.0, omega=1.0)
        record = BogoliubovBackend(settings).observables(params)
        assert record.method == Method.BOGOLIUBOV
        assert record.n2 == pytest.approx(16.0 / 81.0, rel=1e-12)
        assert record.g2_zero == 1.0

    def test_coherent_limit_of_g2(self, settings):
        record = BogoliubovBackend(settings).observables(SystemParams(u=1e-4, j=1.0, omega=5.0))
        assert record.g2_zero == pytest.approx(1.0, abs=1e-3)

    def test_antibunching(self, settings):
        record = BogoliubovBackend(settings).observables(SystemParams(u=0.2, j=1.0, omega=5.0))
        assert record.g2_zero < 1.0

    def test_empty_background(self, settings):
        params = SystemParams(u=0.5, j=1.0, omega=5.0, phi=math.pi)
        record = BogoliubovBackend(settings).observables(params)
        assert record.n2 == 0.0
        assert record.g2_zero is None
        assert record.diagnostics["g2_undefined"] == "EmptyBackgroundError"
        bg = background(params)
        with pytest.raises(EmptyBackgroundError):
            g2_zero(bg, fluctuations(params, bg))

    def test_phase_symmetry(self, settings):
        backend = BogoliubovBackend(settings)
        for phi in (0.3, 1.2, 2.5):
            plus = backend.observables(SystemParams(u=0.3, j=1.0, omega=5.0, phi=phi))
            minus = backend.observables(SystemParams(u=0.3, j=1.0, omega=5.0, phi=-phi))
            assert plus.n2 == pytest.approx(minus.n2, rel=1e-12)
            assert plus.g2_zero == pytest.approx(minus.g2_zero, rel=1e-12)

    def test_diagnostics(self, settings):
        record = BogoliubovBackend(settings).observables(SystemParams(u=0.05, j=3.0, omega=5.0))
        diagnostics = record.diagnostics
        assert set(("r1", "r2", "r3", "max_ratio", "valid", "background_n2")) <= set(diagnostics)
        assert diagnostics["max_ratio"] == max(diagnostics[k] for k in ("r1", "r2", "r3"))
        assert diagnostics["valid"] is True
        assert record.output_flux == record.n2

    @pytest.mark.parametrize("u", [0.3, 0.4, 0.5])
    @pytest.mark.parametrize("j", [0.5, 1.0, 2.0])
    def test_ratio_falls_with_drive(self, u, j):
        ratios = []
        for omega in (5.0, 10.0):
            params = SystemParams(u=u, j=j, omega=omega)
            bg = background(params)
            ratios.append(validity_ratios(bg, fluctuations(params, bg))["r2"])
        assert ratios[1] < ratios[0]

    def test_ratio_falls_with_drive_at_moderate_nonlinearity(self):
        ratios = []
        for omega in (5.0, 10.0):
            params = SystemParams(u=0.2, j=1.0, omega=omega)
            bg = background(params)
            ratios.append(validity_ratios(bg, fluctuations(params, bg))["r2"])
        assert ratios[1] < ratios[0]
