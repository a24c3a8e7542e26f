"""Multi-peak model, initializer, refinement, and text import."""

import numpy as np
import pytest

from cavpull.errors import ParameterError
from cavpull.peak_fitting import (
    MAX_PEAKS,
    STALL_MESSAGE,
    FitResult,
    LorentzPeak,
    PeakModel,
    classify_peaks,
    fit,
    initialize_peaks,
    load_spectrum_text,
)
from cavpull.spectral_core import SpectralGrid, Spectrum, sampled_lorentzian

GRID = SpectralGrid(1340.0, 1360.0, 8001)


def synth(peaks, grid=GRID, baseline=0.0):
    v = np.full(grid.n_points, baseline)
    for c, w, a in peaks:
        v += a * sampled_lorentzian(grid, c, w)
    return v


class TestModelTypes:
    def test_peak_validation(self):
        LorentzPeak(1350.0, 0.5, 1.0)
        with pytest.raises(ParameterError):
            LorentzPeak(1350.0, 0.0, 1.0)
        with pytest.raises(ParameterError):
            LorentzPeak(1350.0, 0.5, -1.0)
        with pytest.raises(ParameterError):
            LorentzPeak(float("nan"), 0.5, 1.0)

    def test_peak_count_limits(self):
        pk = LorentzPeak(1350.0, 0.5, 1.0)
        PeakModel(peaks=(pk,) * MAX_PEAKS)
        with pytest.raises(ParameterError):
            PeakModel(peaks=(pk,) * (MAX_PEAKS + 1))
        with pytest.raises(ParameterError):
            PeakModel(peaks=())
        assert PeakModel(peaks=(), shortfall=True).n_peaks == 0

    def test_evaluate_matches_construction(self):
        model = PeakModel(peaks=(LorentzPeak(1348.0, 1.0, 2.0),
                                 LorentzPeak(1353.0, 0.4, 0.7)),
                          baseline=0.25)
        expected = synth([(1348.0, 1.0, 2.0), (1353.0, 0.4, 0.7)],
                         baseline=0.25)
        np.testing.assert_allclose(model.evaluate(GRID), expected, rtol=1e-14)


class TestInitializer:
    def test_finds_seeded_maxima(self):
        v = synth([(1347.0, 1.2, 1.0), (1353.5, 0.6, 0.5)])
        model = initialize_peaks((GRID, v), 2)
        assert model.n_peaks == 2 and not model.shortfall
        assert model.centers() == pytest.approx([1347.0, 1353.5], abs=GRID.step)
        assert model.fwhms() == pytest.approx([1.2, 0.6], rel=0.2)

    def test_shortfall_when_spectrum_is_simpler(self):
        v = synth([(1350.0, 1.0, 1.0)])
        model = initialize_peaks((GRID, v), 3)
        assert model.shortfall
        assert model.n_peaks == 1

    def test_requires_at_least_one_peak(self):
        with pytest.raises(ParameterError):
            initialize_peaks((GRID, synth([(1350.0, 1.0, 1.0)])), 0)

    def test_accepts_spectrum_object(self):
        s = Spectrum(GRID, synth([(1350.0, 1.0, 1.0)]))
        assert initialize_peaks(s, 1).centers() == pytest.approx([1350.0])


class TestFit:
    def test_single_peak_noiseless_recovery(self):
        true = (1349.3, 0.8, 1.7)
        v = synth([true])
        res = fit((GRID, v), initialize_peaks((GRID, v), 1))
        assert res.usable
        pk = res.model.peaks[0]
        assert pk.center == pytest.approx(true[0], rel=1e-9)
        assert pk.fwhm == pytest.approx(true[1], rel=1e-6)
        assert pk.area == pytest.approx(true[2], rel=1e-6)

    def test_two_peak_noiseless_recovery(self):
        truth = [(1348.0, 1.35, 0.6), (1351.1, 0.4, 0.4)]
        v = synth(truth)
        res = fit((GRID, v), initialize_peaks((GRID, v), 2))
        assert res.usable
        for pk, (c, w, a) in zip(res.model.peaks, truth):
            assert pk.center == pytest.approx(c, abs=1e-6)
            assert pk.fwhm == pytest.approx(w, rel=1e-6)
            assert pk.area == pytest.approx(a, rel=1e-6)

    def test_peaks_come_back_sorted(self):
        v = synth([(1346.0, 0.9, 1.0), (1354.0, 0.9, 1.0)])
        init = PeakModel(peaks=(LorentzPeak(1354.2, 1.0, 1.0),
                                LorentzPeak(1345.8, 1.0, 1.0)))
        res = fit((GRID, v), init)
        assert list(res.model.centers()) == sorted(res.model.centers())

    def test_covariance_shrinks_with_cleaner_data(self):
        rng = np.random.default_rng(7)
        base = synth([(1350.0, 1.0, 1.0)])
        noisy = base + 0.02 * base.max() * rng.standard_normal(base.size)
        cleaner = base + 0.002 * base.max() * rng.standard_normal(base.size)
        init = initialize_peaks((GRID, base), 1)
        var_noisy = fit((GRID, noisy), init).covariance_diag[0]
        var_clean = fit((GRID, cleaner), init).covariance_diag[0]
        assert 0.0 < var_clean < var_noisy

    def test_rejects_empty_model(self):
        with pytest.raises(ParameterError):
            fit((GRID, synth([(1350.0, 1.0, 1.0)])),
                PeakModel(peaks=(), shortfall=True))

    def test_rejects_center_off_grid(self):
        init = PeakModel(peaks=(LorentzPeak(1400.0, 1.0, 1.0),))
        with pytest.raises(ParameterError):
            fit((GRID, synth([(1350.0, 1.0, 1.0)])), init)

    def test_rejects_nonfinite_samples(self):
        v = synth([(1350.0, 1.0, 1.0)])
        v[17] = np.nan
        init = PeakModel(peaks=(LorentzPeak(1350.0, 1.0, 1.0),))
        with pytest.raises(ParameterError):
            fit((GRID, v), init)

    def test_usable_semantics(self):
        model = PeakModel(peaks=(LorentzPeak(1350.0, 1.0, 1.0),))
        ok = FitResult(model, 0.0, 3, converged=True)
        stalled = FitResult(model, 0.1, 9, converged=False,
                            message=STALL_MESSAGE)
        capped = FitResult(model, 0.1, 500, converged=False,
                           message="iteration limit reached")
        assert ok.usable and stalled.usable and not capped.usable


def _result(centers, fwhm=0.5):
    peaks = tuple(LorentzPeak(c, fwhm, 1.0) for c in centers)
    return FitResult(PeakModel(peaks=peaks), 0.0, 1, converged=True)


class TestClassification:
    def test_one_mode_one_line(self):
        labels = classify_peaks(_result([1350.02, 1352.6]), [1350.0], 1352.5)
        assert labels.labels == ("qd", "cavity")
        assert labels.cavity_index == 1
        assert not labels.ambiguous

    def test_everything_near_lines_is_ambiguous(self):
        labels = classify_peaks(_result([1350.05]), [1350.0], 1350.4)
        assert labels.labels == ("qd",)
        assert labels.cavity_index is None
        assert labels.ambiguous

    def test_two_mode_candidates_pick_nearest(self):
        labels = classify_peaks(_result([1344.0, 1350.0, 1356.0]),
                                [1350.0], 1355.0)
        assert labels.labels == ("cavity", "qd", "cavity")
        assert labels.cavity_index == 2
        assert labels.ambiguous

    def test_tolerance_scales_with_linewidth(self):
        # 0.3 meV away: cavity-like under the 0.2 meV floor, dot-like
        # once 3 * zpl_fwhm exceeds the offset
        res = _result([1350.3, 1356.0])
        narrow = classify_peaks(res, [1350.0], 1356.0, zpl_fwhm=0.05)
        wide = classify_peaks(res, [1350.0], 1356.0, zpl_fwhm=0.2)
        assert narrow.labels[0] == "cavity" and narrow.ambiguous
        assert wide.labels[0] == "qd" and not wide.ambiguous

    def test_requires_usable_fit(self):
        bad = FitResult(PeakModel(peaks=(LorentzPeak(1350.0, 1.0, 1.0),)),
                        1.0, 500, converged=False, message="iteration limit")
        with pytest.raises(ParameterError):
            classify_peaks(bad, [1350.0], 1352.0)


class TestTextImport:
    def test_round_trip(self, tmp_path):
        grid = SpectralGrid(1345.0, 1355.0, 401)
        v = synth([(1350.0, 1.0, 1.0)], grid=grid)
        path = tmp_path / "trace.txt"
        lines = ["# exported trace", "# energy_meV counts"]
        lines += [f"{float(e)!r} {float(c)!r}"
                  for e, c in zip(grid.energies, v)]
        path.write_text("\n".join(lines) + "\n")
        got_grid, got_v = load_spectrum_text(path)
        assert got_grid == grid
        np.testing.assert_allclose(got_v, v, rtol=1e-15)

    def test_negative_counts_survive(self, tmp_path):
        path = tmp_path / "noisy.txt"
        path.write_text("0.0 -0.5\n1.0 2.0\n2.0 -0.1\n")
        _, v = load_spectrum_text(path)
        assert v.min() < 0.0

    @pytest.mark.parametrize("body,why", [
        ("1.0 2.0 3.0\n2.0 3.0 4.0\n", "three columns"),
        ("1.0 2.0\n", "single row"),
        ("2.0 1.0\n1.0 1.0\n", "decreasing energy"),
        ("0.0 1.0\n1.0 1.0\n2.5 1.0\n", "uneven step"),
    ])
    def test_malformed_inputs(self, tmp_path, body, why):
        path = tmp_path / "bad.txt"
        path.write_text(body)
        with pytest.raises(ParameterError):
            load_spectrum_text(path)
