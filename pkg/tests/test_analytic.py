"""
Tests for the closed-form eigenpairs.

Normalization is computed in the stretched coordinate and checked here by an
independent quadrature in x. Orthogonality between levels holds only up to
the boundary leakage, so those checks use a large ω₀/ħ where it is far below
the tolerance.
"""

import math
import unittest

import numpy as np
from numpy.polynomial import hermite as H
from scipy import integrate

from pdm_spectra import analytic
from pdm_spectra.analytic import Measure
from pdm_spectra.catalog import make_system
from pdm_spectra.ordering import OrderingScheme, Term, aggregate, gora_williams, preset
from pdm_spectra.utils import ValidationError

NON_HERMITIAN_A34 = aggregate(OrderingScheme(
    (Term(0.5, 1.25, -1.5, -0.75), Term(0.5, -0.25, -0.5, -0.25)),
))


class TestHermite(unittest.TestCase):

    def test_low_orders(self):
        self.assertEqual(analytic.hermite(0, 3.0), 1.0)
        self.assertEqual(analytic.hermite(1, 3.0), 6.0)
        self.assertEqual(analytic.hermite(3, 1.0), -4.0)

    def test_matches_numpy(self):
        t = np.linspace(-3, 3, 13)
        for n in range(0, 21, 4):
            with self.subTest(n=n):
                expected = H.hermval(t, [0] * n + [1])
                scale = np.max(np.abs(expected))
                np.testing.assert_allclose(analytic.hermite(n, t) / scale, expected / scale, rtol=0, atol=1e-12)

    def test_negative_degree(self):
        with self.assertRaises(ValidationError):
            analytic.hermite(-1, 0.0)

    def test_functions_are_orthonormal(self):
        for m in range(5):
            for n in range(m, 5):
                with self.subTest(m=m, n=n):
                    value, _ = integrate.quad(
                        lambda t, m=m, n=n: analytic.hermite_function(m, t) * analytic.hermite_function(n, t),
                        -15, 15, epsabs=1e-13, epsrel=1e-12, limit=200,
                    )
                    self.assertAlmostEqual(value, 1.0 if m == n else 0.0, places=10)

    def test_function_finite_at_high_order(self):
        values = analytic.hermite_function(200, np.linspace(-25, 25, 101))
        self.assertTrue(np.all(np.isfinite(values)))
        self.assertEqual(float(analytic.hermite_function(3, 100.0)), 0.0)


class TestEnergy(unittest.TestCase):

    def test_equally_spaced(self):
        system = make_system('exp', 1.0, 7.0)
        self.assertEqual(analytic.energy(0, system), 3.5)
        self.assertEqual(analytic.energy(5, make_system('nonpoly', 1.0, 2.0)), 11.0)

    def test_independent_of_lambda(self):
        for lam in (0.5, -1.0, 2.0):
            with self.subTest(lam=lam):
                self.assertEqual(analytic.energy(3, make_system('exp', lam, 2.0)), 7.0)
                self.assertEqual(analytic.energy(3, make_system('nonpoly', lam, 2.0)), 7.0)

    def test_scales_with_hbar(self):
        self.assertAlmostEqual(analytic.energy(1, make_system('exp', 1.0, 2.0, hbar=0.5)), 1.5, places=14)

    def test_rejects_inexact_inputs(self):
        with self.assertRaises(ValidationError):
            analytic.energy(0, make_system('sextic', 1.0, 1.0))
        with self.assertRaises(ValidationError):
            analytic.energy(0, make_system('exp', 1.0, 1.0), aggregate(gora_williams()))
        with self.assertRaises(ValidationError):
            analytic.energy(0, make_system('nonpoly', 1.0, 1.0), aggregate(preset('vonroos:a34')))
        with self.assertRaises(ValidationError):
            analytic.energy(-1, make_system('exp', 1.0, 1.0))


class TestClosedForms(unittest.TestCase):

    def test_exp_ground_state_value_at_origin(self):
        system = make_system('exp', 1.0, 2.0)
        # exp(-(μ/2)e^{2λx} + μe^{λx}) = e at x = 0 for μ = 2
        expected = analytic.normalize(0, system) * math.e
        self.assertAlmostEqual(analytic.psi_exp(0, 0.0, system) / expected, 1.0, places=12)

    def test_nonpoly_ground_state_value_at_origin(self):
        system = make_system('nonpoly', 1.0, 2.0)
        self.assertAlmostEqual(analytic.psi_nonpoly(0, 0.0, system) / analytic.normalize(0, system), 1.0,
                               places=12)

    def test_exp_mirror(self):
        pos = make_system('exp', 1.0, 2.0)
        neg = make_system('exp', -1.0, 2.0)
        x = np.linspace(-3, 3, 25)
        for n in range(4):
            with self.subTest(n=n):
                np.testing.assert_allclose(analytic.psi_exp(n, x, neg), analytic.psi_exp(n, -x, pos),
                                           rtol=1e-12, atol=1e-14)

    def test_nonpoly_zero_beyond_singular_point(self):
        system = make_system('nonpoly', 1.0, 2.0)
        values = analytic.psi_nonpoly(1, np.array([-3.0, -2.0, -1.0]), system)
        self.assertTrue(np.all(values == 0.0))
        flipped = make_system('nonpoly', -1.0, 2.0)
        self.assertEqual(analytic.psi_nonpoly(0, 1.5, flipped), 0.0)

    def test_wrong_system(self):
        with self.assertRaises(ValidationError):
            analytic.psi_exp(0, 0.0, make_system('nonpoly', 1.0, 1.0))
        with self.assertRaises(ValidationError):
            analytic.psi_nonpoly(0, 0.0, make_system('exp', 1.0, 1.0))


class TestNormalization(unittest.TestCase):

    def test_unit_norm_by_quadrature_in_x(self):
        for name in ('exp', 'nonpoly'):
            for lam in (1.0, -1.0):
                for omega0 in (2.0, 7.0):
                    system = make_system(name, lam, omega0)
                    for n in range(4):
                        with self.subTest(system=name, lam=lam, omega0=omega0, n=n):
                            solution = analytic.exact_solution(n, system)
                            value = analytic.overlap(solution, solution, system)
                            self.assertAlmostEqual(value, 1.0, delta=1e-8)

    def test_nonpoly_small_lambda_limit(self):
        system = make_system('nonpoly', 1e-3, 2.0)
        self.assertAlmostEqual(analytic.normalize(0, system), (2.0 / math.pi) ** 0.25, places=10)

    def test_wide_window_matches_full_line_constant(self):
        system = make_system('nonpoly', 0.1, 7.0)
        for n in range(5):
            with self.subTest(n=n):
                full_line = math.sqrt(math.sqrt(7.0) / (math.sqrt(math.pi) * 2 ** n * math.factorial(n)))
                self.assertAlmostEqual(analytic.normalize(n, system) / full_line, 1.0, places=9)

    def test_leakage_shrinks_with_omega(self):
        small = analytic.boundary_leakage(2, make_system('exp', 1.0, 2.0))
        large = analytic.boundary_leakage(2, make_system('exp', 1.0, 20.0))
        self.assertGreater(small, 1e-3)
        self.assertLess(large, 1e-6)
        self.assertLess(analytic.boundary_leakage(2, make_system('exp', 1.0, 100.0)), 1e-30)

    def test_window_weight_and_leakage_add_up(self):
        system = make_system('nonpoly', 1.0, 2.0)
        for n in range(4):
            with self.subTest(n=n):
                total = analytic.window_weight(n, system) + analytic.boundary_leakage(n, system)
                self.assertAlmostEqual(total, 1.0, places=10)


class TestOrthonormality(unittest.TestCase):

    def test_large_omega(self):
        cases = [('exp', 1.0), ('exp', -1.0), ('nonpoly', 1.0), ('nonpoly', -1.0)]
        for name, lam in cases:
            system = make_system(name, lam, 100.0)
            solutions = [analytic.exact_solution(n, system) for n in range(7)]
            for a in solutions:
                for b in solutions:
                    if b.n < a.n:
                        continue
                    with self.subTest(system=name, lam=lam, m=a.n, n=b.n):
                        expected = 1.0 if a.n == b.n else 0.0
                        self.assertAlmostEqual(analytic.overlap(a, b, system), expected, delta=1e-8)


class TestQuasiHermitianMap(unittest.TestCase):

    def test_identity_for_hermitian_orderings(self):
        system = make_system('exp', 1.0, 2.0)
        solution = analytic.exact_solution(1, system)
        self.assertIs(analytic.quasi_hermitian_map(solution, system, aggregate(preset('vonroos:a34'))), solution)

    def test_exp_prefactor(self):
        system = make_system('exp', 2.0, 3.0)
        solution = analytic.exact_solution(1, system, NON_HERMITIAN_A34)
        mapped = analytic.quasi_hermitian_map(solution, system, NON_HERMITIAN_A34)
        x = 0.3
        # ᾱ - γ̄ = 1: prefactor λ e^{λx}
        self.assertAlmostEqual(mapped(x) / solution(x), 2.0 * math.exp(0.6), places=12)
        self.assertIs(mapped.measure, Measure.MASS_WEIGHTED)
        self.assertEqual(mapped.eta, -0.5)
        self.assertEqual(mapped.energy, solution.energy)

    def test_nonpoly_prefactor(self):
        system = make_system('nonpoly', 1.0, 2.0)
        solution = analytic.exact_solution(2, system)
        mapped = analytic.quasi_hermitian_map(solution, system, NON_HERMITIAN_A34)
        for x in (-0.5, 0.0, 2.0):
            with self.subTest(x=x):
                self.assertAlmostEqual(mapped(x) / solution(x), (1 + x) ** -2.0, places=12)

    def test_mapped_norm_in_weighted_measure(self):
        system = make_system('exp', 1.0, 2.0)
        for n in range(3):
            with self.subTest(n=n):
                solution = analytic.exact_solution(n, system, NON_HERMITIAN_A34)
                mapped = analytic.quasi_hermitian_map(solution, system, NON_HERMITIAN_A34)
                self.assertAlmostEqual(analytic.overlap(mapped, mapped, system), 1.0, delta=1e-8)

    def test_mixed_measures_are_rejected(self):
        system = make_system('exp', 1.0, 2.0)
        solution = analytic.exact_solution(0, system)
        mapped = analytic.quasi_hermitian_map(solution, system, NON_HERMITIAN_A34)
        with self.assertRaises(ValidationError):
            analytic.overlap(solution, mapped, system)
        with self.assertRaises(ValidationError):
            analytic.quasi_hermitian_map(mapped, system, NON_HERMITIAN_A34)


class TestTables(unittest.TestCase):

    def test_node_count(self):
        cases = [('exp', 1.0, 2.0, 3), ('exp', -1.0, 7.0, 5), ('nonpoly', 1.0, 2.0, 3), ('nonpoly', -1.0, 7.0, 5)]
        for name, lam, omega0, top in cases:
            system = make_system(name, lam, omega0)
            for n in range(top + 1):
                with self.subTest(system=name, lam=lam, omega0=omega0, n=n):
                    solution = analytic.exact_solution(n, system)
                    x, _ = analytic.table_grid(solution, system, points=4001)
                    self.assertEqual(analytic.count_nodes(solution(x)), n)

    def test_table_ends_decay(self):
        for name, lam, omega0 in [('exp', 1.0, 2.0), ('nonpoly', 1.0, 7.0), ('nonpoly', -1.0, 7.0)]:
            system = make_system(name, lam, omega0)
            for n in range(3):
                with self.subTest(system=name, lam=lam, n=n):
                    solution = analytic.exact_solution(n, system)
                    x, converged = analytic.table_grid(solution, system)
                    values = np.abs(solution(x))
                    self.assertTrue(converged)
                    self.assertTrue(np.all(np.diff(x) > 0))
                    self.assertLess(values[0], 2e-10 * values.max())
                    self.assertLess(values[-1], 2e-10 * values.max())

    def test_nonpoly_table_shows_zero_region(self):
        system = make_system('nonpoly', 1.0, 7.0)
        solution = analytic.exact_solution(1, system)
        x, _ = analytic.table_grid(solution, system)
        beyond = x <= -1.0
        self.assertTrue(np.any(beyond))
        self.assertTrue(np.all(solution(x[beyond]) == 0.0))

    def test_count_nodes_ignores_noise_floor(self):
        values = np.array([1.0, 0.5, 1e-12, -1e-12, 1e-12, -0.5, -1.0])
        self.assertEqual(analytic.count_nodes(values), 1)


if __name__ == '__main__':
    unittest.main()
