import math
import unittest

import numpy as np

from src.generators.dimers import domino_count, kasteleyn_domino_count, lozenge_count, macmahon_lozenge_count
from src.generators.lattices import coin_coloured_lattice, integer_lattice, lattice, lattice_radii
from src.generators.model_sets import GOLDEN, fibonacci_model_set, fibonacci_scheme, model_set
from src.generators.sparse import euler_gap_set
from src.generators.substitution import (
    SubstitutionRule,
    expand_word,
    factor_complexity,
    fibonacci_rule,
    substitution_chain,
    thue_morse_rule,
)
from src.generators.visible import coloured_visible_points, visible_mask, visible_points
from src.models.errors import CapacityError, PointSetError, RuleError
from src.models.geometry import Box


class TestLattices(unittest.TestCase):
    def test_integer_lattice_points(self):
        ps = integer_lattice(1, 3.0)
        np.testing.assert_array_equal(ps.points[:, 0], np.arange(-3.0, 4.0))
        self.assertEqual((ps.packing_radius, ps.covering_radius), (0.5, 0.5))

    def test_square_lattice_radii(self):
        r, R = lattice_radii(np.eye(2))
        self.assertAlmostEqual(r, 0.5)
        self.assertAlmostEqual(R, math.sqrt(2.0) / 2.0)

    def test_singular_basis(self):
        with self.assertRaises(PointSetError):
            lattice([[1.0, 2.0], [2.0, 4.0]], Box.cube(3.0, 2))

    def test_coin_colouring_is_seeded(self):
        a = coin_coloured_lattice(50, seed=4)
        b = coin_coloured_lattice(50, seed=4)
        self.assertEqual(a.colors, b.colors)
        self.assertEqual(set(a.colors), {"a", "b"})
        self.assertEqual(len(a), 101)


class TestModelSets(unittest.TestCase):
    def test_fibonacci_gaps_and_density(self):
        ps = fibonacci_model_set(100.0)
        gaps = np.unique(np.round(np.diff(ps.points[:, 0]), 9))
        np.testing.assert_allclose(gaps, [1.0, GOLDEN])
        expected = fibonacci_scheme().density() * 200.0
        self.assertLess(abs(len(ps) - expected), 3.0)
        self.assertAlmostEqual(ps.packing_radius, 0.5)
        self.assertAlmostEqual(ps.covering_radius, GOLDEN / 2.0)

    def test_module_coordinates_are_exact(self):
        ps = fibonacci_model_set(30.0)
        np.testing.assert_allclose(ps.module_coords @ ps.basis, ps.points, atol=1e-12)

    def test_window_length_one_gives_longer_gaps(self):
        ps = fibonacci_model_set(60.0, window_length=1.0)
        gaps = np.unique(np.round(np.diff(ps.points[:, 0]), 9))
        np.testing.assert_allclose(gaps, [GOLDEN, GOLDEN ** 2])

    def test_larger_window_only_adds_points(self):
        box = Box(((-80.0, 80.0),))
        small = model_set(fibonacci_scheme(), box)
        large = model_set(fibonacci_scheme().scaled(1.2), box)
        self.assertLess(len(small), len(large))
        self.assertTrue(set(map(tuple, small.module_coords)) <= set(map(tuple, large.module_coords)))


class TestSubstitution(unittest.TestCase):
    def test_fibonacci_word_complexity(self):
        word = expand_word(fibonacci_rule(), 12, "a")
        for n in range(1, 10):
            self.assertEqual(factor_complexity(word, n), n + 1)

    def test_chain_layout(self):
        ps = substitution_chain(thue_morse_rule(), 4, "a")
        self.assertEqual(len(ps), 16)
        np.testing.assert_array_equal(ps.points[:, 0], np.arange(16.0))
        self.assertEqual("".join(ps.colors), "abbabaabbaababba")
        np.testing.assert_array_equal(ps.weights.real[:4], [1, -1, -1, 1])
        self.assertEqual(ps.window, Box(((0.0, 15.5),)))

    def test_rejects_non_primitive_rule(self):
        with self.assertRaises(RuleError):
            SubstitutionRule(alphabet=("a", "b"), images={"a": ("a",), "b": ("b",)}, lengths={"a": 1.0, "b": 1.0})

    def test_rejects_wrong_lengths(self):
        with self.assertRaises(RuleError):
            SubstitutionRule(alphabet=("a", "b"), images={"a": ("a", "b"), "b": ("a",)}, lengths={"a": 1.0, "b": 1.0})

    def test_unknown_axiom(self):
        with self.assertRaises(RuleError):
            expand_word(fibonacci_rule(), 3, "z")

    def test_thue_morse_letters_balance(self):
        ps = substitution_chain(thue_morse_rule(), 10, "a")
        self.assertEqual(len(ps), 1024)
        self.assertEqual((ps.colors.count("a"), ps.colors.count("b")), (512, 512))


class TestSparseSets(unittest.TestCase):
    def test_visible_points(self):
        ps = visible_points(10)
        self.assertFalse(ps.delone)
        self.assertTrue(visible_mask(np.array([[1, 0]]))[0])
        self.assertFalse(visible_mask(np.array([[0, 0], [2, 4]])).any())
        self.assertNotIn((0.0, 0.0), set(map(tuple, ps.points)))

    def test_coloured_visible_points_cover_the_square(self):
        ps = coloured_visible_points(5)
        self.assertEqual(len(ps), 121)
        self.assertEqual(ps.colors[60], "h")

    def test_visible_points_in_the_smallest_square(self):
        ps = visible_points(2)
        expected = {(p, q) for p in range(-2, 3) for q in range(-2, 3) if math.gcd(p, q) == 1}
        self.assertEqual(len(ps), 16)
        self.assertEqual(set(map(tuple, ps.points.astype(int).tolist())), expected)

    def test_euler_gap_set(self):
        ps = euler_gap_set(4)
        self.assertEqual(len(ps), 8)
        self.assertFalse(ps.delone)
        np.testing.assert_allclose(sorted(ps.points[ps.points[:, 0] > 0, 0]), [1.0, 1 + math.e, 1 + math.e + math.e ** 2, 1 + math.e + math.e ** 2 + math.e ** 3])


class TestDimerCounts(unittest.TestCase):
    def test_small_domino_rectangles(self):
        self.assertEqual(domino_count(2, 2).count, 2)
        self.assertEqual(domino_count(2, 3).count, 3)
        self.assertEqual(domino_count(8, 8).count, 12988816)
        self.assertEqual(domino_count(3, 5).count, 0)

    def test_domino_matches_kasteleyn_product(self):
        for m, n in [(4, 6), (6, 6), (10, 12)]:
            self.assertEqual(domino_count(m, n).count, kasteleyn_domino_count(m, n))

    def test_domino_count_is_symmetric(self):
        for m, n in [(2, 7), (3, 8), (5, 6)]:
            with self.subTest(m=m, n=n):
                self.assertEqual(domino_count(m, n).count, domino_count(n, m).count)

    def test_lozenge_matches_macmahon(self):
        self.assertEqual(lozenge_count(1, 1, 1).count, 2)
        self.assertEqual(lozenge_count(2, 2, 2).count, 20)
        for a, b, c in [(3, 4, 5), (6, 6, 6)]:
            self.assertEqual(lozenge_count(a, b, c).count, macmahon_lozenge_count(a, b, c))

    def test_capacity_limit(self):
        with self.assertRaises(CapacityError):
            domino_count(30, 30)

    def test_to_dict_keeps_big_counts_exact(self):
        payload = domino_count(8, 8).to_dict()
        self.assertEqual(payload["count"], "12988816")
        self.assertEqual((payload["m"], payload["n"]), (8, 8))


if __name__ == "__main__":
    unittest.main()
