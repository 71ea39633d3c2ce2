import unittest

import numpy as np

from src.config.config import Config
from src.core.geometry import crop, translate
from src.diffraction.autocorrelation import autocorrelation
from src.diffraction.model_set_oracle import cut_and_project_peaks
from src.diffraction.peaks import CONSISTENT, CONTINUOUS, detect_peaks, pure_point_diagnostic
from src.diffraction.spectrum import Spectrum, box_fft, default_k_grid, fft_spectrum, integer_box, intensity
from src.generators.lattices import integer_lattice, lattice
from src.generators.model_sets import fibonacci_model_set, fibonacci_scheme
from src.generators.substitution import substitution_chain, thue_morse_rule
from src.generators.visible import visible_points
from src.models.errors import PreconditionError, ValidationError, WindowTooSmallError
from src.models.geometry import Box
from src.models.pointset import PointSet


def _nested(ps: PointSet, half_widths):
    return [crop(ps, Box.cube(h, ps.dimension)) for h in half_widths]


class TestAutocorrelation(unittest.TestCase):
    def test_integer_lattice_coefficients(self):
        gamma = autocorrelation(integer_lattice(1, 100.0), 3.0)
        self.assertEqual(gamma.normalizing_volume, 194.0)
        self.assertAlmostEqual(gamma.coefficient([0.0]).real, 195.0 / 194.0)
        self.assertAlmostEqual(gamma.coefficient([1.0]).real, 1.0)
        self.assertAlmostEqual(gamma.coefficient([0.5]), 0j)
        self.assertEqual(len(gamma.differences), 7)
        self.assertTrue(gamma.is_hermitian())

    def test_weighted_chain_is_hermitian(self):
        gamma = autocorrelation(substitution_chain(thue_morse_rule(), 8, "a"), 4.0)
        self.assertTrue(gamma.is_hermitian())
        self.assertLess(gamma.coefficient([1.0]).real, 0.0)

    def test_fibonacci_density(self):
        ps = fibonacci_model_set(500.0)
        gamma = autocorrelation(ps, 2.0)
        self.assertAlmostEqual(gamma.coefficient([0.0]).real, fibonacci_scheme().density(), delta=0.01)
        self.assertEqual(gamma.coefficient([0.5]), 0j)

    def test_cutoff_too_large(self):
        with self.assertRaises(WindowTooSmallError):
            autocorrelation(integer_lattice(1, 5.0), 6.0)


class TestSpectrum(unittest.TestCase):
    def test_lattice_intensity(self):
        ps = integer_lattice(1, 500.0)
        spectrum = intensity(ps, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(spectrum.intensities, [1001.0 ** 2 / 1000.0, 1.0 / 1000.0, 1001.0 ** 2 / 1000.0], rtol=1e-9)
        self.assertEqual(spectrum.volume, 1000.0)

    def test_fft_agrees_with_direct_sum(self):
        ps = lattice([[1.0, 0.0], [0.0, 1.0]], Box.cube(30.0, 2))
        rng = np.random.default_rng(3)
        ps = ps.subset(np.nonzero(rng.random(len(ps)) < 0.6)[0], ps.window, {"generator": "thinned"})
        fast = fft_spectrum(ps, 20)
        box = integer_box(ps, 20)
        direct = intensity(crop(ps, box), fast.k_grid)
        np.testing.assert_allclose(fast.intensities, direct.intensities, rtol=1e-8, atol=1e-9)

    def test_fft_needs_integer_points(self):
        ps = fibonacci_model_set(50.0)
        with self.assertRaises(PreconditionError):
            box_fft(ps, integer_box(ps, 20))

    def test_grid_and_taper_validation(self):
        ps = integer_lattice(1, 10.0)
        with self.assertRaises(ValidationError):
            intensity(ps, np.zeros((3, 2)))
        with self.assertRaises(ValidationError):
            intensity(ps, [0.0, float("nan")])
        with self.assertRaises(ValidationError):
            intensity(ps, [0.0], taper="gauss")

    def test_default_grid(self):
        self.assertEqual(default_k_grid(1, 11, 1.0).shape, (11, 1))
        self.assertEqual(default_k_grid(2, 100, 1.0).shape, (100, 2))

    def test_translation_leaves_intensity_unchanged(self):
        ps = fibonacci_model_set(200.0)
        k_grid = default_k_grid(1, 257, 1.0)
        original = intensity(ps, k_grid)
        moved = intensity(translate(ps, [0.37]), k_grid)
        np.testing.assert_allclose(moved.intensities, original.intensities, rtol=1e-9, atol=1e-9 * original.intensities.max())


class TestPeakDetection(unittest.TestCase):
    def test_lattice_peaks_scale_with_volume(self):
        k_grid = np.linspace(0.0, 1.0, 5)
        spectra = [intensity(s, k_grid) for s in _nested(integer_lattice(1, 400.0), [100.0, 200.0, 400.0])]
        report = detect_peaks(spectra)
        self.assertEqual([p.k for p in report.peaks], [(0.0,), (1.0,)])
        for peak in report.peaks:
            self.assertAlmostEqual(peak.intensity, 1.0, places=3)
            self.assertGreater(peak.scaling_r2, 0.99)
        self.assertGreater(report.pure_point_fraction, 0.99)

    def test_random_points_only_peak_at_origin(self):
        rng = np.random.default_rng(42)
        ps = PointSet(points=np.sort(rng.uniform(-500.0, 500.0, 1000)).reshape(-1, 1), packing_radius=1e-6, covering_radius=10.0, window=Box(((-500.0, 500.0),)))
        k_grid = np.concatenate(([0.0], np.linspace(0.05, 1.0, 40)))
        spectra = [intensity(s, k_grid) for s in _nested(ps, [125.0, 250.0, 500.0])]
        report = detect_peaks(spectra)
        self.assertEqual([p.k for p in report.peaks], [(0.0,)])

    def test_input_validation(self):
        spectra = [intensity(s, [0.0, 1.0]) for s in _nested(integer_lattice(1, 100.0), [25.0, 50.0, 100.0])]
        with self.assertRaises(ValidationError):
            detect_peaks(spectra[:2])
        with self.assertRaises(ValidationError):
            detect_peaks(spectra[::-1])
        with self.assertRaises(ValidationError):
            detect_peaks(spectra[:2] + [intensity(integer_lattice(1, 100.0), [0.0, 0.5])])

    def test_lobe_points_merge_into_one_peak(self):
        k_grid = np.linspace(0.0, 1.0, 101).reshape(-1, 1)
        profile = np.zeros(101)
        profile[[50, 51, 52]] = [1.0, 0.8, 0.6]
        profile[10] = 0.5
        spectra = [Spectrum(k_grid, v * profile + 1e-3, v, int(v)) for v in (100.0, 200.0, 400.0)]

        self.assertEqual(len(detect_peaks(spectra).peaks), 4)
        merged = detect_peaks(spectra, lobe_halfwidth=10.0)
        self.assertEqual([p.k for p in merged.peaks], [(0.5,), (0.1,)])
        self.assertAlmostEqual(merged.peaks[0].intensity, 1.0)
        self.assertGreater(merged.pure_point_fraction, 0.99)


class TestOracle(unittest.TestCase):
    def test_fibonacci_central_peak(self):
        peaks = cut_and_project_peaks(fibonacci_scheme(), 1.0)
        self.assertEqual(peaks[0].k, 0.0)
        self.assertAlmostEqual(peaks[0].intensity, fibonacci_scheme().density() ** 2)
        self.assertAlmostEqual(peaks[0].intensity, 0.5236, places=3)
        intensities = [p.intensity for p in peaks]
        self.assertEqual(intensities, sorted(intensities, reverse=True))

    def test_needs_one_dimensional_spaces(self):
        from src.generators.model_sets import CutProjectScheme

        square = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        scheme = CutProjectScheme(np.eye(3), square, np.array([[0.0, 0.0, 1.0]]), (0.0, 1.0))
        with self.assertRaises(PreconditionError):
            cut_and_project_peaks(scheme, 1.0)

    def test_finite_spectrum_matches_oracle(self):
        ps = fibonacci_model_set(1000.0)
        peaks = [p for p in cut_and_project_peaks(fibonacci_scheme(), 1.0)[:4] if p.k > 0]
        spectrum = intensity(ps, [[p.k] for p in peaks])
        np.testing.assert_allclose(spectrum.per_volume, [p.intensity for p in peaks], rtol=0.05)


class TestPurePointDiagnostic(unittest.TestCase):
    def test_lattice_is_consistent(self):
        diagnosis = pure_point_diagnostic(integer_lattice(1, 600.0))
        self.assertEqual(diagnosis.verdict, CONSISTENT)
        self.assertEqual(diagnosis.strategy, "fft/q=210")
        self.assertAlmostEqual(diagnosis.report.pure_point_fraction, 1.0)

    def test_thue_morse_has_continuous_component(self):
        diagnosis = pure_point_diagnostic(substitution_chain(thue_morse_rule(), 11, "a"))
        self.assertEqual(diagnosis.verdict, CONTINUOUS)
        self.assertEqual(diagnosis.strategy, "fft/q=210")
        np.testing.assert_allclose(diagnosis.masses, [1.0, 1.0, 1.0], rtol=1e-9)

    def test_visible_points_are_mostly_bragg(self):
        diagnosis = pure_point_diagnostic(visible_points(300))
        self.assertEqual(diagnosis.strategy, "fft/q=30")
        self.assertGreaterEqual(diagnosis.report.pure_point_fraction, 0.8)
        self.assertNotEqual(diagnosis.verdict, CONTINUOUS)

    def test_fibonacci_peaks_match_oracle(self):
        diagnosis = pure_point_diagnostic(fibonacci_model_set(400.0))
        self.assertEqual(diagnosis.strategy, "taper")
        self.assertNotEqual(diagnosis.verdict, CONTINUOUS)
        oracle = cut_and_project_peaks(fibonacci_scheme(), 1.0)
        for peak in diagnosis.report.peaks[:3]:
            nearest = min(oracle, key=lambda p: abs(p.k - peak.k[0]))
            self.assertAlmostEqual(peak.k[0], nearest.k, delta=1e-3)
            self.assertAlmostEqual(peak.intensity, nearest.intensity, delta=0.05 * nearest.intensity)

    def test_window_too_small(self):
        with self.assertRaises(WindowTooSmallError):
            pure_point_diagnostic(integer_lattice(1, 1.0))


class TestDiagnosticsAtScale(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.fibonacci = pure_point_diagnostic(fibonacci_model_set(400.0))

    def test_fibonacci_is_consistent(self):
        self.assertEqual(self.fibonacci.verdict, CONSISTENT)
        self.assertGreaterEqual(self.fibonacci.report.pure_point_fraction, 0.95)

    def test_lobes_report_one_peak_each(self):
        halfwidth = Config.get_diffraction_config()["lobe_halfwidth"] / self.fibonacci.report.volumes[-1]
        ks = sorted(p.k[0] for p in self.fibonacci.report.peaks)
        self.assertTrue(all(b - a > halfwidth for a, b in zip(ks, ks[1:])))

    def test_top_peaks_match_oracle(self):
        oracle = cut_and_project_peaks(fibonacci_scheme(), 1.0)
        peaks = self.fibonacci.report.peaks[:10]
        self.assertEqual(len(peaks), 10)
        for peak in peaks:
            with self.subTest(k=peak.k[0]):
                # only oracle peaks of comparable strength count as a match
                similar = [p for p in oracle if 0.5 * peak.intensity <= p.intensity <= 2.0 * peak.intensity]
                nearest = min(similar, key=lambda p: abs(p.k - peak.k[0]))
                self.assertLessEqual(abs(peak.k[0] - nearest.k), max(0.03 * nearest.k, 1e-6))

    def test_visible_points_are_consistent(self):
        diagnosis = pure_point_diagnostic(visible_points(1000))
        self.assertEqual(diagnosis.strategy, "fft/q=210")
        self.assertEqual(diagnosis.verdict, CONSISTENT)
        self.assertGreaterEqual(diagnosis.report.pure_point_fraction, 0.95)


if __name__ == "__main__":
    unittest.main()
