import math
import unittest

import numpy as np

from src.mahler.dimer_entropy import default_sizes, dimer_entropy_extrapolation, mahler_vs_dimer_report
from src.mahler.polynomial import DOMINO_POLYNOMIAL, LOZENGE_POLYNOMIAL, LaurentPolynomial, eval_on_torus
from src.mahler.quadrature import mahler_measure
from src.models.errors import DegenerateEnsembleError, ParseError, ValidationError

# 4G/pi and 3*sqrt(3)/(4 pi) * L(2, chi_-3)
DOMINO_MEASURE = 1.1662436
LOZENGE_MEASURE = 0.3230659


class TestLaurentPolynomial(unittest.TestCase):
    def test_parse_merges_and_drops_zero_terms(self):
        P = LaurentPolynomial.parse("0,0,4 1,0,1 -1,0,1 0,1,1 0,-1,1 1,0,-1 2,2,0")
        self.assertEqual(P.terms, {(-1, 0): 1, (0, -1): 1, (0, 0): 4, (0, 1): 1})
        self.assertEqual(LaurentPolynomial.parse(P.to_text()), P)

    def test_parse_errors(self):
        for text in ["", "1,0", "a,0,1", "0,0,inf", "0,0,1 0,0,-1"]:
            with self.assertRaises(ParseError):
                LaurentPolynomial.parse(text)

    def test_zero_polynomial(self):
        with self.assertRaises(ValidationError):
            LaurentPolynomial({(1, 1): 0})

    def test_product(self):
        P = LaurentPolynomial({(0, 0): 1, (1, 0): 1}) * LaurentPolynomial({(0, 0): 1, (1, 0): -1})
        self.assertEqual(P.terms, {(0, 0): 1, (2, 0): -1})
        self.assertEqual((2 * P).coefficient_norm, 4.0)

    def test_evaluation_broadcasts(self):
        values = eval_on_torus(DOMINO_POLYNOMIAL, np.zeros((3, 1)), np.zeros((1, 4)))
        self.assertEqual(values.shape, (3, 4))
        np.testing.assert_allclose(values, 8.0)
        self.assertAlmostEqual(abs(DOMINO_POLYNOMIAL(0.5, 0.5)), 0.0)


class TestMahlerMeasure(unittest.TestCase):
    def test_constant(self):
        result = mahler_measure(LaurentPolynomial({(0, 0): 3}))
        self.assertAlmostEqual(result.value, math.log(3))
        self.assertTrue(result.converged)
        self.assertEqual(result.error_estimate, 0.0)

    def test_monomial(self):
        self.assertAlmostEqual(mahler_measure(LaurentPolynomial({(1, 2): 1})).value, 0.0)

    def test_lozenge_polynomial(self):
        result = mahler_measure(LOZENGE_POLYNOMIAL)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.value, LOZENGE_MEASURE, delta=1e-3)

    def test_domino_polynomial(self):
        result = mahler_measure(DOMINO_POLYNOMIAL)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.value, DOMINO_MEASURE, delta=2e-3)

    def test_symmetries_and_products(self):
        base = mahler_measure(LOZENGE_POLYNOMIAL).value
        self.assertAlmostEqual(mahler_measure(LOZENGE_POLYNOMIAL.swap_variables()).value, base, places=6)
        self.assertAlmostEqual(mahler_measure(LOZENGE_POLYNOMIAL.invert_x()).value, base, places=6)
        doubled = mahler_measure(LOZENGE_POLYNOMIAL * 2).value
        self.assertAlmostEqual(doubled, base + math.log(2), places=6)

    def test_measure_is_additive_on_products(self):
        smooth = LaurentPolynomial({(0, 0): 3, (1, 0): 1, (0, 1): 1})
        self.assertAlmostEqual(mahler_measure(smooth * smooth).value, 2.0 * math.log(3), places=8)
        base = mahler_measure(LOZENGE_POLYNOMIAL).value
        self.assertAlmostEqual(mahler_measure(LOZENGE_POLYNOMIAL * LOZENGE_POLYNOMIAL).value, 2.0 * base, delta=4e-3)

    def test_invalid_grid(self):
        with self.assertRaises(ValidationError):
            mahler_measure(LOZENGE_POLYNOMIAL, base_grid=-4)


class TestDimerEntropy(unittest.TestCase):
    def test_domino_extrapolation(self):
        result = dimer_entropy_extrapolation("domino")
        self.assertEqual(result["sizes"], default_sizes("domino"))
        self.assertAlmostEqual(result["per_site"], DOMINO_MEASURE / 4.0, delta=0.02)
        self.assertLess(result["fit_residual"], 1e-3)

    def test_lozenge_extrapolation(self):
        result = dimer_entropy_extrapolation("lozenge")
        self.assertGreater(result["per_site"], 0.0)
        self.assertEqual(result["counts"][0]["count"], "20")

    def test_size_validation(self):
        with self.assertRaises(ValidationError):
            dimer_entropy_extrapolation("domino", [8])
        with self.assertRaises(ValidationError):
            dimer_entropy_extrapolation("domino", [8, 8])
        with self.assertRaises(ValidationError):
            dimer_entropy_extrapolation("triangle")
        with self.assertRaises(DegenerateEnsembleError):
            dimer_entropy_extrapolation("domino", [3, 5])

    def test_domino_report(self):
        report = mahler_vs_dimer_report("domino")
        self.assertAlmostEqual(report["ratio"], 4.0, delta=0.3)
        self.assertLessEqual(report["ratio_stability"], 0.05)
        self.assertEqual(len(report["history"]), 3)

    def test_lozenge_report(self):
        report = mahler_vs_dimer_report("lozenge")
        self.assertGreater(report["per_site"], 0.0)
        self.assertLessEqual(report["ratio_stability"], 0.08)

    def test_report_needs_three_sizes(self):
        with self.assertRaises(ValidationError):
            mahler_vs_dimer_report("domino", [8, 12])
        with self.assertRaises(DegenerateEnsembleError):
            mahler_vs_dimer_report("domino", [3, 5, 7])


if __name__ == "__main__":
    unittest.main()
