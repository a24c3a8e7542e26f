"""Grid, Lorentzian, Spectrum and convolution basics."""

import numpy as np
import pytest

from cavpull.errors import ParameterError
from cavpull.spectral_core import (
    SpectralGrid,
    Spectrum,
    default_grid,
    gaussian_convolve,
    gaussian_kernel,
    lorentzian,
    sampled_lorentzian,
    trapezoid_integral,
)

# peak of a unit-area Lorentzian with fwhm 1.35: 2/(pi*1.35)
PEAK_135 = 0.471570201753764
# trapezoid mass of a fwhm=0.05 line centered on the default grid; the
# missing tail mass is the analytic 2/pi * arctan(span/fwhm) complement
MASS_NARROW_DEFAULT = 0.9984084538680484


class TestSpectralGrid:
    def test_default_grid_shape(self):
        g = default_grid()
        assert (g.e_min, g.e_max, g.n_points) == (1340.0, 1360.0, 8001)
        assert g.step == pytest.approx(0.0025, rel=0, abs=0)

    def test_energies_endpoints_and_immutability(self):
        g = SpectralGrid(10.0, 20.0, 11)
        assert g.energies[0] == 10.0 and g.energies[-1] == 20.0
        assert not g.energies.flags.writeable

    def test_nearest_index_clamps(self):
        g = SpectralGrid(0.0, 1.0, 11)
        assert g.nearest_index(0.26) == 3
        assert g.nearest_index(-5.0) == 0
        assert g.nearest_index(5.0) == 10

    def test_contains_with_slack(self):
        g = SpectralGrid(0.0, 1.0, 11)
        assert g.contains(1.0) and not g.contains(1.01)
        assert g.contains(1.01, slack=0.02)

    @pytest.mark.parametrize("args", [
        (1.0, 1.0, 11), (2.0, 1.0, 11), (0.0, 1.0, 1),
        (float("nan"), 1.0, 11), (0.0, float("inf"), 11),
    ])
    def test_rejects_degenerate_grids(self, args):
        with pytest.raises(ParameterError):
            SpectralGrid(*args)


class TestLorentzian:
    def test_peak_value_oracle(self):
        assert lorentzian(1350.0, 1350.0, 1.35) == pytest.approx(
            PEAK_135, rel=1e-14)

    def test_scalar_and_array_agree(self):
        x = np.array([-1.0, 0.0, 2.5])
        arr = lorentzian(x, 0.0, 0.7)
        assert arr.shape == x.shape
        for xi, vi in zip(x, arr):
            assert lorentzian(float(xi), 0.0, 0.7) == vi

    def test_symmetry(self):
        assert lorentzian(1349.0, 1350.0, 1.35) == pytest.approx(
            lorentzian(1351.0, 1350.0, 1.35), rel=1e-15)

    def test_narrow_line_mass_oracle(self):
        g = default_grid()
        v = sampled_lorentzian(g, 1350.0, 0.05)
        mass = np.trapezoid(v, dx=g.step)
        assert mass == pytest.approx(MASS_NARROW_DEFAULT, rel=1e-9)

    def test_sampled_matches_pointwise(self):
        g = SpectralGrid(0.0, 10.0, 101)
        assert np.array_equal(sampled_lorentzian(g, 5.0, 1.0),
                              lorentzian(g.energies, 5.0, 1.0))

    @pytest.mark.parametrize("fwhm", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_bad_widths(self, fwhm):
        with pytest.raises(ParameterError):
            lorentzian(0.0, 0.0, fwhm)
        with pytest.raises(ParameterError):
            sampled_lorentzian(SpectralGrid(0.0, 1.0, 3), 0.5, fwhm)


class TestSpectrum:
    def test_integral_matches_numpy(self):
        g = SpectralGrid(0.0, 1.0, 101)
        v = np.linspace(0.0, 2.0, 101)
        s = Spectrum(g, v)
        assert s.integral() == pytest.approx(np.trapezoid(v, dx=g.step),
                                             rel=1e-15)
        assert trapezoid_integral(s) == s.integral()

    def test_values_become_readonly(self):
        g = SpectralGrid(0.0, 1.0, 3)
        s = Spectrum(g, [1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            s.values[0] = 2.0

    def test_normalized_flag_is_checked(self):
        g = SpectralGrid(0.0, 1.0, 3)
        Spectrum(g, [1.0, 1.0, 1.0], normalized=True)
        with pytest.raises(ParameterError):
            Spectrum(g, [2.0, 2.0, 2.0], normalized=True)

    def test_rejects_negative_and_nonfinite(self):
        g = SpectralGrid(0.0, 1.0, 3)
        with pytest.raises(ParameterError):
            Spectrum(g, [1.0, -0.1, 1.0])
        with pytest.raises(ParameterError):
            Spectrum(g, [1.0, float("nan"), 1.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ParameterError):
            Spectrum(SpectralGrid(0.0, 1.0, 3), [1.0, 1.0])


class TestGaussianConvolution:
    def test_kernel_unit_sum_and_odd_length(self):
        k = gaussian_kernel(0.0025, 0.05)
        assert k.sum() == pytest.approx(1.0, rel=1e-14)
        assert k.size % 2 == 1

    def test_mass_conserved_for_contained_spectrum(self):
        g = default_grid()
        v = sampled_lorentzian(g, 1350.0, 0.5)
        v /= np.trapezoid(v, dx=g.step)
        s = Spectrum(g, v, normalized=True)
        out = gaussian_convolve(s, 0.08)
        assert out.integral() == pytest.approx(s.integral(), rel=1e-9)

    def test_broadens_a_narrow_line(self):
        g = default_grid()
        s = Spectrum(g, sampled_lorentzian(g, 1350.0, 0.05))
        out = gaussian_convolve(s, 0.1)
        # peak drops when the line is smeared
        assert out.values.max() < 0.6 * s.values.max()

    def test_sigma_zero_is_identity(self):
        g = SpectralGrid(0.0, 1.0, 101)
        s = Spectrum(g, np.ones(101))
        assert gaussian_convolve(s, 0.0) is s

    def test_rejects_bad_sigma(self):
        g = SpectralGrid(0.0, 1.0, 101)
        s = Spectrum(g, np.ones(101))
        with pytest.raises(ParameterError):
            gaussian_convolve(s, -0.1)
        with pytest.raises(ParameterError):
            gaussian_convolve(s, 60.0)  # kernel wider than the grid
