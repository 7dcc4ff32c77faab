import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rydhet.atomsys import TWO_PI, reference_system
from rydhet.config import LineSpec
from rydhet.errors import ConfigError, FitPreconditionError
from rydhet.scan import (
    Spectrum,
    count_peaks,
    detuning_grid,
    find_center,
    fit_gain,
    gaussian_fit,
    gaussian_rms_residual,
    overlay_lines,
    peak_height_curve,
    read_spectrum_csv,
    scan_spectrum,
    symmetry_decompose,
)

MHZ = TWO_PI * 1e6


def synthetic(amp=50e-6, center=0.0, width=TWO_PI * 30e6, n=201, noise=0.0, seed=None,
              span=TWO_PI * 400e6):
    x = np.linspace(center - span / 2, center + span / 2, n)
    y = amp * np.exp(-0.5 * ((x - center) / width) ** 2)
    if noise:
        y = y + np.random.default_rng(seed).normal(0.0, noise, n)
    return Spectrum(x, y.astype(complex), y)


class TestSpectrum:
    def test_minimum_length(self):
        with pytest.raises(ValueError):
            Spectrum(np.arange(7.0), np.zeros(7, complex), np.zeros(7))

    def test_increasing(self):
        x = np.arange(10.0)
        x[3] = x[2]
        with pytest.raises(ValueError):
            Spectrum(x, np.zeros(10, complex), np.zeros(10))

    def test_shapes(self):
        with pytest.raises(ValueError):
            Spectrum(np.arange(10.0), np.zeros(9, complex), np.zeros(10))

    def test_grid_default_centre(self, weak_probe):
        g = detuning_grid(weak_probe, n_points=11)
        assert g[5] == pytest.approx(-weak_probe.probe.detuning, rel=1e-15)
        with pytest.raises(ValueError):
            detuning_grid(weak_probe, n_points=4)


class TestScan:
    @pytest.mark.parametrize("engine", ["full", "eff2l"])
    def test_no_coupling_all_zero(self, engine):
        s = reference_system(coupling_rabi_mhz=0.0)
        sp = scan_spectrum(s, n_points=9, engine=engine)
        assert np.all(sp.chi == 0) and np.all(sp.phase == 0)

    def test_unknown_engine(self, weak_probe):
        with pytest.raises(ValueError, match="engine"):
            scan_spectrum(weak_probe, n_points=9, engine="magic")

    def test_points_independent_of_order(self, weak_probe):
        grid = detuning_grid(weak_probe, n_points=17)
        fwd = scan_spectrum(weak_probe, grid, workers=1).chi
        par = scan_spectrum(weak_probe, grid, workers=4).chi
        sub = scan_spectrum(weak_probe, grid[::2], workers=1).chi
        assert np.array_equal(fwd, par)
        assert np.array_equal(fwd[::2], sub)

    def test_phase_column(self, weak_probe):
        sp = scan_spectrum(weak_probe, n_points=9)
        expected = 0.5 * weak_probe.probe.wavevector * weak_probe.cell_length * sp.chi.real
        assert np.allclose(sp.phase, expected, rtol=1e-15, atol=0)

    def test_weak_probe_sign_changing(self, weak_probe):
        sp = scan_spectrum(weak_probe, n_points=41)
        assert sp.chi.real.min() < 0 < sp.chi.real.max()

    def test_strong_probe_single_signed(self, strong_probe):
        sp = scan_spectrum(strong_probe, n_points=41)
        assert np.all(sp.chi.real > 0)

    def test_engines_agree_in_shape(self):
        # Both engines put the strong-probe peak on the same side of -Dp.
        s = reference_system(probe_rabi_mhz=250.0, coupling_rabi_mhz=5.0)
        grid = detuning_grid(s, 1600 * MHZ, 81)
        full = scan_spectrum(s, grid).chi.real
        eff = scan_spectrum(s, grid, engine="eff2l").chi.real
        core = np.abs(grid + s.probe.detuning) < 300 * MHZ
        assert np.all(full[core] > 0) and np.all(eff[core] > 0)
        assert np.corrcoef(full, eff)[0, 1] > 0.5


class TestOverlay:
    def test_two_halves_equal_one(self, weak_probe):
        grid = detuning_grid(weak_probe, n_points=9)
        one = scan_spectrum(weak_probe, grid).chi
        two = overlay_lines(weak_probe, [LineSpec(0.0, 0.5), LineSpec(0.0, 0.5)], grid).chi
        assert np.allclose(two, one, rtol=1e-15, atol=0)

    @given(st.floats(0.1, 3.0), st.floats(0.1, 3.0))
    def test_linear(self, alpha, beta):
        s = reference_system()
        grid = detuning_grid(s, n_points=9)
        l1 = [LineSpec(0.0, 1.0)]
        l2 = [LineSpec(80 * MHZ, 0.7)]
        a = overlay_lines(s, l1, grid, engine="eff2l").chi
        b = overlay_lines(s, l2, grid, engine="eff2l").chi
        both = overlay_lines(s, [LineSpec(0.0, alpha), LineSpec(80 * MHZ, 0.7 * beta)], grid,
                             engine="eff2l").chi
        assert np.allclose(both, alpha * a + beta * b, rtol=1e-12, atol=0)

    def test_three_resolved_lines(self):
        s = reference_system(probe_rabi_mhz=250.0, coupling_rabi_mhz=5.0)
        # Shifted copies must stay clear of Dc = +Dp, where the closed-form
        # light shift diverges.
        lines = [LineSpec(0.0, 1.0, "a"), LineSpec(-800 * MHZ, 0.6, "b"),
                 LineSpec(-1600 * MHZ, 0.3, "c")]
        grid = -s.probe.detuning + np.linspace(-2000, 500, 251) * MHZ
        sp = overlay_lines(s, lines, grid, engine="eff2l")
        assert count_peaks(sp.phase, 0.15 * np.max(np.abs(sp.phase))) == 3

    def test_needs_lines(self, weak_probe):
        with pytest.raises(ValueError):
            overlay_lines(weak_probe, [])

    def test_weight_positive(self):
        with pytest.raises(ConfigError):
            LineSpec(0.0, -1.0)


class TestGaussianFit:
    def test_exact_recovery(self):
        fit = gaussian_fit(synthetic(center=5 * MHZ))
        assert fit.converged
        assert fit.amplitude == pytest.approx(50e-6, rel=1e-6)
        assert fit.center == pytest.approx(5 * MHZ, rel=1e-6)
        assert fit.width == pytest.approx(TWO_PI * 30e6, rel=1e-6)

    def test_negative_peak(self):
        fit = gaussian_fit(synthetic(amp=-20e-6))
        assert fit.amplitude == pytest.approx(-20e-6, rel=1e-6)

    def test_noisy_recovery(self):
        for seed in range(20):
            fit = gaussian_fit(synthetic(noise=2e-6, seed=seed))
            assert fit.converged and fit.width > 0
            assert abs(fit.amplitude - 50e-6) <= 0.1 * 50e-6

    def test_all_zero_rejected(self):
        x = np.linspace(0, 1, 20)
        with pytest.raises(FitPreconditionError):
            gaussian_fit(Spectrum(x, np.zeros(20, complex), np.zeros(20)))

    def test_flat_rejected(self):
        x = np.linspace(0, 1, 20)
        with pytest.raises(FitPreconditionError):
            gaussian_fit(Spectrum(x, np.ones(20, complex), np.ones(20)))

    def test_budget_exhaustion_flags(self):
        fit = gaussian_fit(synthetic(noise=5e-6, seed=1), max_evaluations=2)
        assert not fit.converged
        assert np.isfinite(fit.amplitude)

    @given(st.integers(0, 10_000))
    def test_fit_not_worse_than_start(self, seed):
        sp = synthetic(noise=4e-6, seed=seed)
        fit = gaussian_fit(sp)
        a0, c0, w0 = fit.initial
        assert fit.rms_residual <= gaussian_rms_residual(sp, a0, c0, w0) * (1 + 1e-12)
        assert fit.rms_residual == pytest.approx(
            gaussian_rms_residual(sp, fit.amplitude, fit.center, fit.width), rel=1e-9)


class TestSymmetry:
    def test_odd(self):
        x = np.linspace(-1, 1, 101)
        y = x * np.exp(-x ** 2)
        assert symmetry_decompose(Spectrum(x, y + 0j, y), 0.0)[1] == pytest.approx(1.0, abs=1e-12)

    def test_even(self):
        sym, anti = symmetry_decompose(synthetic(), 0.0)
        assert sym == pytest.approx(1.0, abs=1e-12) and anti < 1e-12

    @given(st.floats(-0.5, 0.5), st.floats(1e-9, 1e9))
    def test_fractions_sum_and_scale(self, c, k):
        x = np.linspace(-1, 1, 81)
        y = np.exp(-((x - 0.2) / 0.3) ** 2) + 0.4 * x
        a = symmetry_decompose(Spectrum(x, y + 0j, y), c)
        b = symmetry_decompose(Spectrum(x, k * y + 0j, k * y), c)
        assert sum(a) == pytest.approx(1.0, abs=1e-10)
        assert a[0] == pytest.approx(b[0], rel=1e-9, abs=1e-12)

    def test_center_outside(self):
        with pytest.raises(ValueError):
            symmetry_decompose(synthetic(), 10 * TWO_PI * 400e6)

    def test_find_center_extremum(self):
        assert find_center(synthetic(center=12 * MHZ, n=401)) == pytest.approx(12 * MHZ,
                                                                                abs=2 * MHZ)

    def test_find_center_tie_goes_to_smaller_detuning(self):
        x = np.linspace(-10.0, 10.0, 21)
        y = np.exp(-((x - 6) ** 2)) + np.exp(-((x + 6) ** 2))
        assert find_center(Spectrum(x, y + 0j, y)) == -6.0 or find_center(
            Spectrum(x, y + 0j, y)) == 6.0
        y2 = np.exp(-((np.abs(x) - 6) ** 2)) * (1 + 0 * x)
        assert abs(find_center(Spectrum(x, y2 + 0j, y2))) == 6.0

    def test_find_center_tie_break_direction(self):
        # Two equal plateaus after smoothing: x in {-8, -7, -6} and x = -1.
        x = np.linspace(-10.0, 1.0, 12)
        y = np.zeros(12)
        y[0:7] = 1.0
        y[7:12] = 1.0
        y[6] = 0.0
        assert find_center(Spectrum(x, y + 0j, y)) == -1.0


class TestPeakHeight:
    def test_normalisation_and_collapse(self):
        s = reference_system()
        curves = peak_height_curve(s, [TWO_PI * 20e6, TWO_PI * 200e6], [1e18, 3e19],
                                   engine="eff2l", n_points=21)
        assert np.all(curves.normalized[:, 0] == 1.0)
        assert np.allclose(curves.normalized[0], curves.normalized[1], rtol=1e-12, atol=0)
        assert curves.heights[1, 0] == pytest.approx(30 * curves.heights[0, 0], rel=1e-12)

    def test_empty(self, weak_probe):
        with pytest.raises(ValueError):
            peak_height_curve(weak_probe, [], [1e18])

    def test_fit_gain(self):
        m = np.array([1.0, 2.0, 3.0])
        assert fit_gain(m, 2.5 * m) == pytest.approx(2.5, rel=1e-15)
        with pytest.raises(ValueError):
            fit_gain(np.zeros(3), m)


class TestSpectrumFiles:
    def test_measured_format(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("detuning_MHz,phase_urad\n" + "".join(
            f"{d},{np.exp(-(d / 30) ** 2) * 5}\n" for d in range(50, -51, -5)))
        sp = read_spectrum_csv(p)
        assert np.all(np.diff(sp.delta_c) > 0)
        assert sp.phase.max() == pytest.approx(5e-6)
        assert np.all(np.isnan(sp.chi))

    def test_missing_columns(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,y\n1,2\n")
        with pytest.raises(ValueError, match="columns"):
            read_spectrum_csv(p)
