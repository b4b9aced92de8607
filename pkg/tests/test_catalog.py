"""
Tests for the system catalog.

The derivative closed forms feed every effective potential, so each one is
checked against a central difference of the mass itself.
"""

import math
import unittest

import numpy as np

from pdm_spectra.catalog import (
    EXACT_SYSTEMS,
    SystemId,
    make_system,
    parse_system_id,
    system_from_config,
)
from pdm_spectra.utils import ConfigError, ValidationError

# (system, lambda, extra params, sample points inside the domain)
SAMPLES = [
    ('exp', 1.0, {}, [-0.5, 0.0, 0.7]),
    ('exp', -0.5, {}, [-1.0, 0.3]),
    ('nonpoly', 1.0, {}, [-0.5, 0.0, 1.5]),
    ('nonpoly', -0.5, {}, [-3.0, 0.0, 1.5]),
    ('sextic', 0.5, {}, [-1.0, 0.0, 2.0]),
    ('log', 1.0, {}, [-2.0, 0.0, 0.8]),
    ('rational', 0.5, {}, [-1.0, 0.0, 1.0]),
    ('power', 0.5, {'a': 2.0}, [0.5, 1.0, 2.0]),
    ('harmonic', 0.0, {}, [-1.0, 0.0, 1.0]),
]


class TestSystemIds(unittest.TestCase):

    def test_short_and_long_names(self):
        cases = {
            'exp': SystemId.EXP,
            'ExpOscillator': SystemId.EXP,
            'nonpolynomial': SystemId.NONPOLY,
            'appB_sextic': SystemId.SEXTIC,
            ' rational ': SystemId.RATIONAL,
            SystemId.POWER: SystemId.POWER,
        }
        for value, expected in cases.items():
            with self.subTest(value=value):
                self.assertIs(parse_system_id(value), expected)

    def test_unknown_name(self):
        with self.assertRaises(ValidationError):
            parse_system_id('quartic')

    def test_only_exp_and_nonpoly_are_exact(self):
        self.assertEqual(set(EXACT_SYSTEMS), {SystemId.EXP, SystemId.NONPOLY})


class TestMassDerivatives(unittest.TestCase):

    def test_closed_forms_match_central_differences(self):
        step = 1e-5
        for name, lam, params, xs in SAMPLES:
            system = make_system(name, lam, 1.5, **params)
            for x in xs:
                with self.subTest(system=name, lam=lam, x=x):
                    m = system.mass
                    d1 = (m(x + step) - m(x - step)) / (2 * step)
                    d2 = (m(x + step) - 2 * m(x) + m(x - step)) / step ** 2
                    scale = max(1.0, abs(float(m(x))))
                    self.assertAlmostEqual(float(system.mass_d1(x)) / scale, d1 / scale, places=7)
                    self.assertAlmostEqual(float(system.mass_d2(x)) / scale, d2 / scale, places=4)

    def test_mass_positive_on_domain(self):
        for name, lam, params, xs in SAMPLES:
            system = make_system(name, lam, 1.0, **params)
            with self.subTest(system=name, lam=lam):
                self.assertTrue(np.all(system.contains(xs)))
                self.assertTrue(np.all(system.mass(np.array(xs)) > 0))

    def test_vectorized(self):
        system = make_system('sextic', 1.0, 1.0)
        x = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(system.mass(x), [float(system.mass(v)) for v in x])
        np.testing.assert_array_equal(system.mass_fn(x), system.mass(x))
        np.testing.assert_array_equal(system.potential_fn(x), system.potential(x))


class TestPotentials(unittest.TestCase):

    def test_minimum_at_origin(self):
        for name, lam, params, _ in SAMPLES:
            if name == 'power':
                continue
            system = make_system(name, lam, 2.0, **params)
            with self.subTest(system=name, lam=lam):
                self.assertEqual(float(system.potential(0.0)), 0.0)
                self.assertGreater(float(system.potential(0.3 if lam >= 0 else -0.3)), 0.0)

    def test_exp_mirror(self):
        pos = make_system('exp', 1.0, 2.0)
        neg = make_system('exp', -1.0, 2.0)
        x = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(neg.mass(x), pos.mass(-x), rtol=1e-14)
        np.testing.assert_allclose(neg.potential(x), pos.potential(-x), rtol=1e-14)

    def test_exp_potential_saturates_on_one_side(self):
        system = make_system('exp', 1.0, 2.0)
        self.assertAlmostEqual(float(system.potential(-50.0)), 2.0, places=12)

    def test_log_potential_uses_asinh(self):
        system = make_system('log', 0.5, 1.0)
        x = 1.7
        expected = 0.5 * math.log(0.5 * x + math.sqrt(1 + 0.25 * x * x)) ** 2 / 0.25
        self.assertAlmostEqual(float(system.potential(x)), expected, places=12)


class TestDomains(unittest.TestCase):

    def test_nonpoly_singular_side_follows_lambda(self):
        self.assertEqual(make_system('nonpoly', 1.0, 1.0).domain, (-1.0, math.inf))
        self.assertEqual(make_system('nonpoly', -2.0, 1.0).domain, (-math.inf, 0.5))
        self.assertEqual(make_system('nonpoly', 1.0, 1.0).singular_point, -1.0)

    def test_rational_domain(self):
        system = make_system('rational', 0.5, 1.0)
        self.assertEqual(system.domain, (-math.inf, 2.0))
        self.assertFalse(bool(system.contains(2.0)))
        self.assertEqual(system.singular_point, 2.0)

    def test_whole_line_systems(self):
        for name in ('exp', 'sextic', 'log'):
            with self.subTest(system=name):
                system = make_system(name, 1.0, 1.0)
                self.assertEqual(system.domain, (-math.inf, math.inf))
                self.assertIsNone(system.singular_point)


class TestMakeSystem(unittest.TestCase):

    def test_rejects_bad_parameters(self):
        cases = [
            ('exp', 1.0, 0.0, {}),
            ('exp', 1.0, -1.0, {}),
            ('exp', 0.0, 1.0, {}),
            ('nonpoly', 0.0, 1.0, {}),
            ('sextic', -1.0, 1.0, {}),
            ('power', -1.0, 1.0, {}),
            ('power', 0.5, 1.0, {'a': 0.0}),
            ('power', 0.5, 1.0, {'a': 'two'}),
            ('power', 0.5, 1.0, {'a': None}),
            ('exp', 1.0, 1.0, {'a': 2.0}),
            ('exp', math.nan, 1.0, {}),
        ]
        for name, lam, omega0, params in cases:
            with self.subTest(system=name, lam=lam, omega0=omega0, params=params):
                with self.assertRaises(ValidationError):
                    make_system(name, lam, omega0, **params)

    def test_rejects_non_positive_hbar(self):
        with self.assertRaises(ValidationError):
            make_system('exp', 1.0, 1.0, hbar=0.0)

    def test_sextic_allows_zero_lambda(self):
        system = make_system('sextic', 0.0, 1.0)
        self.assertEqual(float(system.mass(3.0)), 1.0)

    def test_to_dict(self):
        system = make_system('power', 0.5, 2.0, a=3.0)
        self.assertEqual(system.to_dict(),
                         {'system': 'power', 'lambda': 0.5, 'omega0': 2.0, 'hbar': 1.0, 'a': 3.0})


class TestSystemFromConfig(unittest.TestCase):

    def test_round_trip_of_fields(self):
        system = system_from_config({'system': 'nonpoly', 'lambda': -1, 'omega0': 7, 'hbar': 0.5})
        self.assertIs(system.id, SystemId.NONPOLY)
        self.assertEqual((system.lam, system.omega0, system.hbar), (-1.0, 7.0, 0.5))

    def test_harmonic_defaults_to_zero_lambda(self):
        self.assertEqual(system_from_config({'system': 'harmonic'}).lam, 0.0)

    def test_missing_system_key(self):
        with self.assertRaises(ConfigError):
            system_from_config({'lambda': 1.0})

    def test_not_a_mapping(self):
        with self.assertRaises(ConfigError):
            system_from_config(['exp'])

    def test_bad_values_are_validation_errors(self):
        with self.assertRaises(ValidationError):
            system_from_config({'system': 'exp', 'omega0': 'fast'})


if __name__ == '__main__':
    unittest.main()
