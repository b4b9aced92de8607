"""
Tests for the classical Liénard layer.

Both exactly solvable systems are isochronous: every bounded orbit has
period 2π/ω₀ whatever its amplitude, and the closed-form orbits solve
ẍ + f(x)ẋ² + g(x) = 0 exactly.
"""

import math
import unittest

import numpy as np

from pdm_spectra import classical
from pdm_spectra.catalog import make_system
from pdm_spectra.classical import OrbitIntegrator, make_lienard
from pdm_spectra.utils import NonPeriodicOrbitError, SingularOrbitError, ValidationError

LIENARD_CASES = [('exp', 1.0), ('exp', -0.5), ('nonpoly', 1.0), ('nonpoly', -2.0)]


class TestLienardData(unittest.TestCase):

    def test_isochronicity_condition(self):
        for name, lam in LIENARD_CASES:
            system = make_lienard(name, lam, 2.0)
            with self.subTest(system=name, lam=lam):
                self.assertLess(system.isochronicity_defect(), 1e-10)

    def test_linear_limit(self):
        system = make_lienard('exp', 0.0, 2.0)
        x = np.linspace(-1, 1, 5)
        np.testing.assert_array_equal(system.f(x), np.zeros(5))
        np.testing.assert_allclose(system.g(x), 4 * x)
        self.assertIsNone(system.pdm)
        self.assertEqual(system.isochronicity_defect(), 0.0)

    def test_rejects_systems_without_lienard_data(self):
        for name in ('sextic', 'log', 'harmonic'):
            with self.subTest(system=name):
                with self.assertRaises(ValidationError):
                    make_lienard(name, 1.0, 1.0)

    def test_rejects_bad_frequency(self):
        with self.assertRaises(ValidationError):
            make_lienard('exp', 1.0, 0.0)

    def test_nonpoly_physical_region(self):
        system = make_lienard('nonpoly', 1.0, 1.0)
        self.assertTrue(bool(system.contains(-0.5)))
        self.assertFalse(bool(system.contains(-1.5)))

    def test_hamiltonian_matches_catalog_system(self):
        x = np.linspace(-0.5, 0.5, 11)
        v = np.linspace(1.0, -1.0, 11)
        for name, lam in LIENARD_CASES:
            with self.subTest(system=name, lam=lam):
                np.testing.assert_allclose(
                    classical.hamiltonian(make_lienard(name, lam, 2.0), x, v),
                    classical.hamiltonian(make_system(name, lam, 2.0), x, v),
                    rtol=1e-14,
                )

    def test_linear_hamiltonian(self):
        system = make_lienard('nonpoly', 0.0, 2.0)
        self.assertAlmostEqual(float(classical.hamiltonian(system, 1.0, 2.0)), 4.0, places=14)


class TestClosedForms(unittest.TestCase):

    def test_zero_amplitude_rests_at_origin(self):
        t = np.linspace(0, 5, 11)
        for name, lam in LIENARD_CASES:
            with self.subTest(system=name, lam=lam):
                np.testing.assert_array_equal(np.abs(classical.closed_form(name, 0.0, 0.3, lam, 2.0, t)), 0.0)

    def test_exp_value(self):
        x = classical.closed_form('exp', 0.5, 0.0, 1.0, 2.0, math.pi / 4)
        self.assertAlmostEqual(float(x), math.log(0.5), places=14)

    def test_nonpoly_value(self):
        x = classical.closed_form('nonpoly', 0.5, 0.0, 1.0, 2.0, math.pi / 4)
        self.assertAlmostEqual(float(x), 1.0, places=14)

    def test_amplitude_range(self):
        cases = [('exp', 1.5, 1.0), ('exp', -0.1, 1.0), ('nonpoly', 1.0, 1.0), ('nonpoly', 0.6, -2.0)]
        for name, amplitude, lam in cases:
            with self.subTest(system=name, amplitude=amplitude, lam=lam):
                with self.assertRaises(ValidationError):
                    classical.closed_form(name, amplitude, 0.0, lam, 2.0, 0.0)

    def test_exp_accepts_limiting_amplitude(self):
        x = classical.closed_form('exp', 1.0, 0.0, 1.0, 2.0, 0.0)
        self.assertEqual(float(x), 0.0)

    def test_satisfies_the_equation_of_motion(self):
        step = 1e-4
        t = np.linspace(0, 3, 50)
        for name, lam in LIENARD_CASES:
            amplitude = 0.5 / abs(lam)
            system = make_lienard(name, lam, 2.0)
            with self.subTest(system=name, lam=lam):
                def x(s):
                    return classical.closed_form(name, amplitude, 0.2, lam, 2.0, s)
                v = classical.closed_form_velocity(name, amplitude, 0.2, lam, 2.0, t)
                acc = (x(t + step) - 2 * x(t) + x(t - step)) / step ** 2
                residual = acc + system.f(x(t)) * v ** 2 + system.g(x(t))
                self.assertLess(float(np.max(np.abs(residual))), 1e-5)

    def test_velocity_matches_derivative(self):
        step = 1e-6
        t = np.linspace(0, 3, 20)
        for name, lam in LIENARD_CASES:
            amplitude = 0.5 / abs(lam)
            with self.subTest(system=name, lam=lam):
                diff = (classical.closed_form(name, amplitude, 0.0, lam, 2.0, t + step)
                        - classical.closed_form(name, amplitude, 0.0, lam, 2.0, t - step)) / (2 * step)
                np.testing.assert_allclose(classical.closed_form_velocity(name, amplitude, 0.0, lam, 2.0, t),
                                           diff, atol=1e-7)

    def test_initial_conditions_signs(self):
        _, v_exp = classical.initial_conditions('exp', 0.5, 0.0, 1.0, 2.0)
        _, v_nonpoly = classical.initial_conditions('nonpoly', 0.5, 0.0, 1.0, 2.0)
        self.assertLess(v_exp, 0)
        self.assertGreater(v_nonpoly, 0)


class TestIntegration(unittest.TestCase):

    def test_follows_closed_form(self):
        for name, lam in LIENARD_CASES:
            amplitude = 0.5 / abs(lam)
            system = make_lienard(name, lam, 2.0)
            x0, v0 = classical.initial_conditions(name, amplitude, 0.0, lam, 2.0)
            with self.subTest(system=name, lam=lam):
                traj = OrbitIntegrator().integrate(system, x0, v0, 5 * math.pi, 0.01)
                expected = classical.closed_form(name, amplitude, 0.0, lam, 2.0, traj.t)
                self.assertLess(float(np.max(np.abs(traj.x - expected))), 1e-7)

    def test_energy_is_conserved_over_twenty_periods(self):
        for name in ('exp', 'nonpoly'):
            system = make_lienard(name, 1.0, 2.0)
            for amplitude in (0.1, 0.5, 0.9):
                x0, v0 = classical.initial_conditions(name, amplitude, 0.0, 1.0, 2.0)
                with self.subTest(system=name, amplitude=amplitude):
                    traj = OrbitIntegrator().integrate(system, x0, v0, 20 * math.pi, 0.01)
                    energy = traj.energy(system)
                    drift = float(np.max(np.abs(energy - energy[0]))) / abs(float(energy[0]))
                    self.assertLess(drift, 1e-8)

    def test_rows(self):
        system = make_lienard('exp', 1.0, 2.0)
        traj = OrbitIntegrator().integrate(system, 0.0, -1.0, 1.0, 0.25)
        rows = list(traj.rows(system))
        self.assertEqual(len(rows), 5)
        self.assertEqual(len(rows[0]), 4)
        self.assertAlmostEqual(float(rows[0][3]), 0.5, places=14)

    def test_exp_orbit_stays_confined(self):
        system = make_lienard('exp', 1.0, 2.0)
        x0, v0 = classical.initial_conditions('exp', 0.9, 0.0, 1.0, 2.0)
        traj = OrbitIntegrator().integrate(system, x0, v0, 3 * math.pi, 0.005)
        self.assertGreaterEqual(float(np.min(traj.x)), math.log(0.1) - 1e-6)
        self.assertLessEqual(float(np.max(traj.x)), math.log(1.9) + 1e-6)

    def test_nonpoly_escape(self):
        system = make_lienard('nonpoly', 1.0, 2.0)
        with self.assertRaises(SingularOrbitError) as ctx:
            OrbitIntegrator().integrate(system, 0.0, 2.4, 2.0, 1e-3)
        self.assertAlmostEqual(ctx.exception.escape_time, math.asin(1 / 1.2) / 2, delta=2e-3)

    def test_zero_initial_data_stays_at_rest(self):
        for name, lam in LIENARD_CASES:
            with self.subTest(system=name, lam=lam):
                traj = OrbitIntegrator().integrate(make_lienard(name, lam, 2.0), 0.0, 0.0, 3.0, 0.1)
                self.assertEqual(float(np.max(np.abs(traj.x))), 0.0)
                self.assertEqual(float(np.max(np.abs(traj.v))), 0.0)

    def test_rk4_agrees_with_adaptive(self):
        system = make_lienard('exp', 1.0, 2.0)
        x0, v0 = classical.initial_conditions('exp', 0.5, 0.0, 1.0, 2.0)
        dt = math.pi / 2000
        adaptive = OrbitIntegrator().integrate(system, x0, v0, 2 * math.pi, dt)
        fixed = OrbitIntegrator(method='rk4').integrate(system, x0, v0, 2 * math.pi, dt)
        self.assertEqual(len(adaptive.t), len(fixed.t))
        self.assertLess(float(np.max(np.abs(adaptive.x - fixed.x))), 1e-6)

    def test_rk4_detects_escape(self):
        system = make_lienard('nonpoly', 1.0, 2.0)
        with self.assertRaises(SingularOrbitError):
            OrbitIntegrator(method='rk4').integrate(system, 0.0, 2.4, 2.0, 1e-3)

    def test_rejects_bad_input(self):
        system = make_lienard('nonpoly', 1.0, 2.0)
        with self.assertRaises(ValidationError):
            OrbitIntegrator().integrate(system, -1.5, 0.0, 1.0, 0.1)
        with self.assertRaises(ValidationError):
            OrbitIntegrator().integrate(system, 0.0, 0.0, 1.0, 0.0)
        with self.assertRaises(ValidationError):
            OrbitIntegrator(method='euler')


class TestPeriod(unittest.TestCase):

    def test_isochronous(self):
        for name, lam in (('exp', 1.0), ('nonpoly', 1.0)):
            system = make_lienard(name, lam, 2.0)
            for amplitude in (0.1, 0.3, 0.5, 0.7, 0.9):
                with self.subTest(system=name, amplitude=amplitude):
                    self.assertAlmostEqual(classical.period(system, amplitude), math.pi, delta=1e-6)

    def test_harmonic_limit(self):
        system = make_lienard('nonpoly', 0.0, 3.0)
        self.assertAlmostEqual(classical.period(system, 1.0), 2 * math.pi / 3, delta=1e-6)

    def test_turning_times_follow_phase(self):
        system = make_lienard('exp', 1.0, 2.0)
        x0, v0 = classical.initial_conditions('exp', 0.5, 0.0, 1.0, 2.0)
        traj = OrbitIntegrator().integrate(system, x0, v0, 2.5 * math.pi, math.pi / 2000)
        np.testing.assert_allclose(classical.turning_times(system, traj), [0.75 * math.pi, 1.75 * math.pi],
                                   atol=1e-7)

        system = make_lienard('nonpoly', 1.0, 2.0)
        x0, v0 = classical.initial_conditions('nonpoly', 0.5, 0.0, 1.0, 2.0)
        traj = OrbitIntegrator().integrate(system, x0, v0, 2.5 * math.pi, math.pi / 2000)
        np.testing.assert_allclose(classical.turning_times(system, traj),
                                   [0.25 * math.pi, 1.25 * math.pi, 2.25 * math.pi], atol=1e-7)

    def test_too_short_a_run(self):
        system = make_lienard('exp', 1.0, 2.0)
        with self.assertRaises(NonPeriodicOrbitError):
            classical.period(system, 0.5, cycles=0.5)


class TestLinearize(unittest.TestCase):

    def test_recovers_template(self):
        for name, lam in LIENARD_CASES:
            system = make_lienard(name, lam, 2.0)
            with self.subTest(system=name, lam=lam):
                lin = classical.linearize(system.f, system.g, system.sample_range())
                self.assertEqual(lin.x_ref, 0.0)
                self.assertAlmostEqual(lin.g1, 4.0, delta=1e-8)
                self.assertAlmostEqual(lin.g2, 0.0, delta=1e-8)
                self.assertLess(lin.consistency, 1e-8)

    def test_map_is_harmonic_coordinate(self):
        for name, lam in LIENARD_CASES:
            system = make_lienard(name, lam, 2.0)
            lo, hi = system.sample_range()
            x = np.linspace(lo, hi, 17)
            with self.subTest(system=name, lam=lam):
                lin = classical.linearize(system.f, system.g, (lo, hi))
                np.testing.assert_allclose(lin.h(x), classical.harmonic_coordinate(system, x), atol=1e-9)
                self.assertEqual(lin.h(0.0), 0.0)

    def test_fixed_coefficients_measure_mismatch(self):
        system = make_lienard('exp', 1.0, 2.0)
        lin = classical.linearize(system.f, system.g, (-1.0, 1.0), g1=1.0, g2=0.0)
        self.assertGreater(lin.consistency, 0.1)

    def test_rejects_empty_range(self):
        system = make_lienard('exp', 1.0, 2.0)
        with self.assertRaises(ValidationError):
            classical.linearize(system.f, system.g, (1.0, 1.0))

    def test_harmonic_coordinate_along_orbits(self):
        t = np.linspace(0, 4, 25)
        s = np.sin(2.0 * t + 0.4)
        exp = make_lienard('exp', 1.0, 2.0)
        nonpoly = make_lienard('nonpoly', 1.0, 2.0)
        np.testing.assert_allclose(
            classical.harmonic_coordinate(exp, classical.closed_form('exp', 0.6, 0.4, 1.0, 2.0, t)),
            -0.6 * s, atol=1e-12)
        np.testing.assert_allclose(
            classical.harmonic_coordinate(nonpoly, classical.closed_form('nonpoly', 0.6, 0.4, 1.0, 2.0, t)),
            0.6 * s, atol=1e-12)


if __name__ == '__main__':
    unittest.main()
