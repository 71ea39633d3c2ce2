import math
import unittest

import numpy as np

from src.core.geometry import translate
from src.generators.lattices import integer_lattice, lattice
from src.generators.model_sets import fibonacci_model_set
from src.hullmetric.kronecker import KroneckerSystem, kronecker_entropy_demo, sup_circle_distance
from src.hullmetric.metric import CAP, MetricBracket, _free_point_2d, hull_metric, orbit_metric, separated
from src.hullmetric.separation import covering_number, hull_sample, separated_set
from src.hullmetric.theorem import (
    FAIL,
    NOT_GUARANTEED,
    PASS,
    check_htop_equals_hpc,
    check_lemma_geometry,
    epsilon0,
    rho,
)
from src.models.errors import PointSetError, PreconditionError, WindowError, WindowTooSmallError
from src.models.geometry import Box
from src.models.pointset import PointSet


def _moved_site(half_width: int) -> PointSet:
    """
    Z with the site 2 moved to 2.1
    """
    points = [float(n) for n in range(-half_width, half_width + 1) if n != 2] + [2.1]
    return PointSet(
        points=sorted(points),
        packing_radius=0.5,
        covering_radius=0.55,
        window=Box(((-half_width, half_width),)),
    )


def _without_site(ps: PointSet, site) -> PointSet:
    keep = np.nonzero(np.any(np.abs(ps.points - np.asarray(site, dtype=float)) > 1e-9, axis=1))[0]
    return ps.subset(keep, ps.window, dict(ps.provenance))


class TestFreePoint(unittest.TestCase):
    def test_thin_crescent_is_found(self):
        # the disc around c leaves a crescent of width at most 1e-4 in the unit disc
        c = -1e-4 * np.array([math.cos(0.3), math.sin(0.3)])
        self.assertTrue(_free_point_2d(np.zeros(2), 1.0, c[None, :], 1.0, 1e-3))

    def test_covering_disc_blocks_the_lens(self):
        self.assertFalse(_free_point_2d(np.zeros(2), 1.0, np.zeros((1, 2)), 1.0, 1e-3))

    def test_lens_tips_are_tested(self):
        # the lens of B_1(0) and B_1(-t) is a sliver around x = -0.95
        t = np.array([1.9, 0.0])
        blocked = np.array([[-0.95, 0.0]])
        self.assertTrue(_free_point_2d(t, 1.0, blocked, 0.3, 1e-3))
        self.assertFalse(_free_point_2d(t, 1.0, blocked, 0.32, 1e-3))

    def test_disjoint_lens_is_empty(self):
        self.assertFalse(_free_point_2d(np.array([2.5, 0.0]), 1.0, np.empty((0, 2)), 0.5, 1e-3))


class TestMetricAxioms(unittest.TestCase):
    def setUp(self):
        self.Z = integer_lattice(1, 100.0)

    def test_symmetry(self):
        other = _moved_site(100)
        forward, backward = hull_metric(self.Z, other), hull_metric(other, self.Z)
        self.assertLessEqual(forward.lower, backward.upper + 1e-12)
        self.assertLessEqual(backward.lower, forward.upper + 1e-12)

    def test_triangle_inequality(self):
        a, b, c = self.Z, translate(self.Z, [0.1]), translate(self.Z, [0.3])
        ab, bc, ac = hull_metric(a, b), hull_metric(b, c), hull_metric(a, c)
        self.assertLessEqual(ac.lower, ab.upper + bc.upper)
        self.assertAlmostEqual(ac.midpoint, 0.15, delta=2e-3)

    def test_two_dimensional_shift(self):
        Z2 = integer_lattice(2, 25.0)
        bracket = hull_metric(Z2, translate(Z2, [0.1, 0.0]))
        self.assertTrue(bracket.certified)
        self.assertAlmostEqual(bracket.midpoint, 0.05, delta=2e-3)


class TestLemmaSuite(unittest.TestCase):
    """
    Pairs sharing the origin that differ by one removed site at distance m

    The hull distance solves d (m + d) = 1, which stays above 1/(m + 0.5).
    """

    def _assert_holds(self, base: PointSet, site) -> None:
        S = float(np.linalg.norm(site)) + 0.5
        result = check_lemma_geometry(base, _without_site(base, site), S)
        self.assertTrue(result["holds"], msg=str(result))
        m = S - 0.5
        self.assertAlmostEqual(result["d_lower"], 0.5 * (math.sqrt(m * m + 4.0) - m), delta=2e-3)

    def test_one_dimensional_pairs(self):
        Z = integer_lattice(1, 40.0)
        sites = [[float(m)] for m in range(3, 18)] + [[-float(m)] for m in range(3, 18)]
        for site in sites:
            with self.subTest(site=site):
                self._assert_holds(Z, site)

    def test_two_dimensional_pairs(self):
        Z2 = integer_lattice(2, 16.0)
        sites = [
            (3, 0), (0, 3), (-3, 0), (0, -3), (3, 1), (1, 3), (-3, 2), (2, -3), (3, 3), (-3, -3),
            (4, 0), (0, -4), (4, 2), (-2, 4), (4, -3), (5, 0), (3, 4), (-4, -4), (5, 2), (-5, 3),
        ]
        for site in sites:
            with self.subTest(site=site):
                self._assert_holds(Z2, [float(v) for v in site])


class TestHullMetric(unittest.TestCase):
    def setUp(self):
        self.Z = integer_lattice(1, 100.0)

    def test_identical_sets(self):
        bracket = hull_metric(self.Z, self.Z)
        self.assertEqual((bracket.lower, bracket.upper), (0.0, 0.0))

    def test_small_shift(self):
        bracket = hull_metric(self.Z, translate(self.Z, [0.1]), resolution=1e-3)
        self.assertTrue(bracket.certified)
        self.assertLessEqual(bracket.upper - bracket.lower, 1e-3)
        self.assertAlmostEqual(bracket.midpoint, 0.05, delta=2e-3)

    def test_different_densities_hit_the_cap(self):
        even = lattice([[2.0]], Box(((-100.0, 100.0),)))
        bracket = hull_metric(self.Z, even)
        self.assertEqual((bracket.lower, bracket.upper), (CAP, CAP))

    def test_dimension_mismatch(self):
        with self.assertRaises(PointSetError):
            hull_metric(self.Z, integer_lattice(2, 5.0))

    def test_tiny_windows_are_not_certified(self):
        a = integer_lattice(1, 1.0)
        b = translate(a, [0.1])
        with self.assertRaises(WindowTooSmallError):
            hull_metric(a, b)
        self.assertFalse(hull_metric(a, b, strict=False).certified)

    def test_bracket_validation(self):
        with self.assertRaises(ValueError):
            MetricBracket(0.5, 0.2)

    def test_orbit_metric_dominates_hull_metric(self):
        other = _moved_site(100)
        d = hull_metric(self.Z, other)
        d_orbit = orbit_metric(self.Z, other, 3.0)
        self.assertGreaterEqual(d_orbit.upper, d.lower)
        self.assertGreaterEqual(d_orbit.lower, d.lower - 1e-3)

    def test_separated(self):
        shifted = translate(self.Z, [0.5])
        self.assertTrue(separated(self.Z, shifted, 1.0, 0.2))
        self.assertFalse(separated(self.Z, shifted, 1.0, 0.3))
        self.assertFalse(separated(self.Z, self.Z, 1.0, 0.1))


class TestLemmaGeometry(unittest.TestCase):
    def test_moved_site_respects_the_bound(self):
        result = check_lemma_geometry(integer_lattice(1, 50.0), _moved_site(50), 3.0)
        self.assertAlmostEqual(result["d_lower_bound"], 0.25)
        self.assertTrue(result["holds"])
        self.assertAlmostEqual(result["d_lower"], math.sqrt(2.0) - 1.0, delta=2e-3)

    def test_sets_agreeing_on_the_ball(self):
        with self.assertRaises(PreconditionError):
            check_lemma_geometry(integer_lattice(1, 50.0), _moved_site(50), 1.5)

    def test_origin_must_be_a_point(self):
        Z = integer_lattice(1, 50.0)
        with self.assertRaises(PreconditionError):
            check_lemma_geometry(translate(Z, [0.5]), Z, 3.0)


class TestSeparatedSets(unittest.TestCase):
    def test_hull_sample_shares_one_window(self):
        hs = hull_sample(integer_lattice(1, 30.0), [[0.0], [0.25], [0.5]], 10.0)
        self.assertEqual(len(hs), 3)
        self.assertEqual({e.window for e in hs.elements}, {Box(((-10.0, 10.0),))})

    def test_translate_must_cover_the_window(self):
        with self.assertRaises(WindowError):
            hull_sample(integer_lattice(1, 30.0), [[25.0]], 10.0)

    def test_exact_and_greedy_agree_on_shifts(self):
        hs = hull_sample(integer_lattice(1, 30.0), [[0.0], [0.25], [0.5]], 10.0)
        exact = separated_set(hs, 1.0, 0.2, exact=True, threads=1)
        greedy = separated_set(hs, 1.0, 0.2, exact=False)
        self.assertEqual(exact.N_hat, 2)
        self.assertEqual(exact.indices, [0, 2])
        self.assertEqual(greedy.indices, [0, 2])

    def test_covering_number(self):
        self.assertEqual(covering_number(0.5, 1.0, 1), 6)
        self.assertGreater(covering_number(0.1, 1.0, 2), covering_number(0.2, 1.0, 2))


class TestTheoremCheck(unittest.TestCase):
    def test_constants(self):
        self.assertAlmostEqual(epsilon0(0.5, 0.5), 0.25)
        self.assertAlmostEqual(epsilon0(2.0, 4.0), 0.125)
        self.assertAlmostEqual(rho(2.0, 1.0, 0.5), 5.5)
        with self.assertRaises(PreconditionError):
            epsilon0(1.0, 0.5)

    def test_fibonacci_records(self):
        ps = fibonacci_model_set(100.0)
        records = check_htop_equals_hpc(ps, [2.0], 0.2, extra_translates=4, seed=1)
        record = records[0]
        self.assertAlmostEqual(record["eps0"], 0.25)
        self.assertEqual(record["separation_check"], PASS)
        self.assertEqual(record["covering_check"], PASS)
        self.assertGreaterEqual(record["N_hat"], record["patch_count_D"])
        self.assertEqual(record["representatives"], record["patch_count_D"])

    def test_large_eps_is_not_guaranteed(self):
        ps = fibonacci_model_set(100.0)
        record = check_htop_equals_hpc(ps, [2.0], 0.3, extra_translates=0)[0]
        self.assertEqual(record["separation_check"], NOT_GUARANTEED)
        self.assertIn(record["covering_check"], (PASS, FAIL))

    def test_window_too_small(self):
        with self.assertRaises(WindowTooSmallError):
            check_htop_equals_hpc(integer_lattice(1, 10.0), [2.0], 0.2)

    def test_separated_counts_grow_with_D(self):
        hs = hull_sample(fibonacci_model_set(60.0), [[0.0], [1.0], [2.6], [4.2], [7.1]], 20.0)
        counts = [separated_set(hs, D, 0.2, exact=True, threads=1).N_hat for D in (0.5, 2.0, 6.0)]
        self.assertEqual(counts, sorted(counts))


class TestTheoremAtScale(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.ps = fibonacci_model_set(150.0)
        cls.eps = 0.9 * epsilon0(cls.ps.packing_radius, cls.ps.covering_radius)
        cls.records = check_htop_equals_hpc(cls.ps, [4.0, 8.0, 12.0], cls.eps, seed=0)

    def test_both_inequalities_pass(self):
        for record in self.records:
            with self.subTest(D=record["D"]):
                self.assertEqual(record["separation_check"], PASS)
                self.assertEqual(record["covering_check"], PASS)
                self.assertGreaterEqual(record["N_hat"], record["patch_count_D"])

    def test_patch_counts_grow(self):
        counts = [record["patch_count_D"] for record in self.records]
        self.assertEqual(counts, sorted(counts))
        self.assertGreater(counts[-1], counts[0])


class TestKronecker(unittest.TestCase):
    def test_distance_is_translation_invariant(self):
        system = KroneckerSystem.square_roots_of_primes(3)
        orbit = system.orbit(50)
        shift = system.shift(7.3)
        np.testing.assert_array_equal(
            system.metric(orbit[:, None, :] + shift, orbit[None, :, :] + shift),
            system.metric(orbit[:, None, :], orbit[None, :, :]),
        )

    def test_separated_sizes_do_not_depend_on_radius(self):
        system = KroneckerSystem.square_roots_of_primes(2)
        sizes = kronecker_entropy_demo(system, 0.2, [1.0, 5.0, 20.0], 400)
        self.assertEqual(len(set(sizes)), 1)
        self.assertGreater(sizes[0], 1)
        self.assertLessEqual(sizes[0], 16)

    def test_metric_is_sup_of_circle_distances(self):
        system = KroneckerSystem([0.5, 0.25])
        self.assertIs(system.metric, sup_circle_distance)
        a, b = system.shift(0.2), system.shift(1.9)
        # (0.1, 0.05) against (0.95, 0.475) on the 2-torus
        self.assertAlmostEqual(float(system.metric(a, b)), 0.425, places=12)
        self.assertAlmostEqual(float(system.metric(b, a)), 0.425, places=12)

    def test_demo_uses_the_system_metric(self):
        calls = []

        def counting_metric(a, b):
            calls.append(1)
            return sup_circle_distance(a, b)

        system = KroneckerSystem([np.sqrt(2.0)], metric=counting_metric)
        kronecker_entropy_demo(system, 0.1, [1.0], 20)
        self.assertGreater(len(calls), 0)

    def test_sizes_are_constant_at_the_control_scales(self):
        system = KroneckerSystem.square_roots_of_primes(2)
        sizes = kronecker_entropy_demo(system, 0.1, [1.0, 10.0, 100.0], 200)
        self.assertEqual(len(set(sizes)), 1)
        # disjoint sup-balls of radius 0.05 on the unit 2-torus
        self.assertLess(sizes[0], 100)

    def test_rotation_is_reduced_mod_one(self):
        system = KroneckerSystem([1.25, 3.5])
        np.testing.assert_allclose(system.rotation_vector, [0.25, 0.5])
        self.assertEqual(system.torus_dim, 2)


if __name__ == "__main__":
    unittest.main()
