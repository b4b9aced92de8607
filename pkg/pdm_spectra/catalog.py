"""
Catalog of position-dependent-mass systems: mass profiles, potentials, domains

Every evaluator is vectorized over numpy arrays and uses closed-form
derivatives of the mass; nothing here differentiates numerically.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .utils import ConfigError, ValidationError


class SystemId(str, Enum):
    """Catalog tags. The value is the short name used in configs and on the CLI."""

    EXP = 'exp'
    NONPOLY = 'nonpoly'
    SEXTIC = 'sextic'
    LOG = 'log'
    RATIONAL = 'rational'
    POWER = 'power'
    HARMONIC = 'harmonic'


_ALIASES = {
    'exposcillator': SystemId.EXP,
    'exponential': SystemId.EXP,
    'nonpolyoscillator': SystemId.NONPOLY,
    'nonpolynomial': SystemId.NONPOLY,
    'appb_sextic': SystemId.SEXTIC,
    'appb_log': SystemId.LOG,
    'appb_rational': SystemId.RATIONAL,
    'appb_power': SystemId.POWER,
}

# Systems whose spectrum has a closed form for suitable orderings
EXACT_SYSTEMS = (SystemId.EXP, SystemId.NONPOLY)


def parse_system_id(value):
    """Accept a SystemId, its short value, or a long catalog name (case-insensitive)"""
    if isinstance(value, SystemId):
        return value
    key = str(value).strip().lower()
    try:
        return SystemId(key)
    except ValueError:
        pass
    if key in _ALIASES:
        return _ALIASES[key]
    names = ', '.join(s.value for s in SystemId)
    raise ValidationError(f"Unknown system {value!r} (expected one of: {names})")


@dataclass(frozen=True)
class PdmSystem:
    """
    A catalog entry: m(x), V(x), their domain and parameters.

    `lam` is the nonlinearity parameter λ (named so because `lambda` is a
    Python keyword). For the power-law system it is the exponent ν and the
    amplitude `a` is carried in `params`.
    """

    id: SystemId
    lam: float
    omega0: float
    hbar: float = 1.0
    params: dict = field(default_factory=dict)

    # -- closed forms -----------------------------------------------------

    def mass(self, x):
        return _FORMS[self.id][0](self, np.asarray(x, dtype=float))

    def mass_d1(self, x):
        return _FORMS[self.id][1](self, np.asarray(x, dtype=float))

    def mass_d2(self, x):
        return _FORMS[self.id][2](self, np.asarray(x, dtype=float))

    def potential(self, x):
        return _FORMS[self.id][3](self, np.asarray(x, dtype=float))

    mass_fn = mass
    potential_fn = potential

    @property
    def domain(self):
        """Open interval (x_lo, x_hi) on which m > 0 and V is finite"""
        lam = self.lam
        if self.id is SystemId.NONPOLY:
            return (-1.0 / lam, math.inf) if lam > 0 else (-math.inf, -1.0 / lam)
        if self.id is SystemId.RATIONAL:
            return (-math.inf, 1.0 / lam) if lam > 0 else (1.0 / lam, math.inf)
        if self.id is SystemId.POWER:
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    def contains(self, x):
        """Elementwise test for strict membership in the domain"""
        lo, hi = self.domain
        x = np.asarray(x, dtype=float)
        return (x > lo) & (x < hi)

    @property
    def singular_point(self):
        """Finite domain edge where m or V blows up, or None"""
        if self.id in (SystemId.NONPOLY, SystemId.RATIONAL):
            lo, hi = self.domain
            return lo if math.isfinite(lo) else hi
        return None

    def to_dict(self):
        data = {
            'system': self.id.value,
            'lambda': self.lam,
            'omega0': self.omega0,
            'hbar': self.hbar,
        }
        data.update(self.params)
        return data


# -- per-system closed forms ---------------------------------------------

def _exp_mass(s, x):
    return s.lam ** 2 * np.exp(2 * s.lam * x)


def _exp_d1(s, x):
    return 2 * s.lam * _exp_mass(s, x)


def _exp_d2(s, x):
    return 4 * s.lam ** 2 * _exp_mass(s, x)


def _exp_potential(s, x):
    return 0.5 * s.omega0 ** 2 * np.expm1(s.lam * x) ** 2


def _nonpoly_mass(s, x):
    return (1 + s.lam * x) ** -4.0


def _nonpoly_d1(s, x):
    return -4 * s.lam * (1 + s.lam * x) ** -5.0


def _nonpoly_d2(s, x):
    return 20 * s.lam ** 2 * (1 + s.lam * x) ** -6.0


def _nonpoly_potential(s, x):
    return 0.5 * s.omega0 ** 2 * x ** 2 / (1 + s.lam * x) ** 2


def _sextic_mass(s, x):
    return (1 + s.lam * x ** 2) ** -3.0


def _sextic_d1(s, x):
    return -6 * s.lam * x * (1 + s.lam * x ** 2) ** -4.0


def _sextic_d2(s, x):
    q = 1 + s.lam * x ** 2
    return -6 * s.lam * q ** -4.0 + 48 * s.lam ** 2 * x ** 2 * q ** -5.0


def _sextic_potential(s, x):
    return 0.5 * s.omega0 ** 2 * x ** 2 / (1 + s.lam * x ** 2)


def _log_mass(s, x):
    return 1 / (1 + (s.lam * x) ** 2)


def _log_d1(s, x):
    return -2 * s.lam ** 2 * x / (1 + (s.lam * x) ** 2) ** 2


def _log_d2(s, x):
    q = 1 + (s.lam * x) ** 2
    return 8 * s.lam ** 4 * x ** 2 / q ** 3 - 2 * s.lam ** 2 / q ** 2


def _log_potential(s, x):
    # ln(λx + sqrt(1+λ²x²)) is asinh(λx)
    return 0.5 * s.omega0 ** 2 * np.arcsinh(s.lam * x) ** 2 / s.lam ** 2


# Rational system written in t = 1 - λx: m = (1+t)² / (4t³)
def _rational_mass(s, x):
    t = 1 - s.lam * x
    return (1 + t) ** 2 / (4 * t ** 3)


def _rational_d1(s, x):
    t = 1 - s.lam * x
    return s.lam * (1 + t) * (t + 3) / (4 * t ** 4)


def _rational_d2(s, x):
    t = 1 - s.lam * x
    return s.lam ** 2 * (t ** 2 + 6 * t + 6) / (2 * t ** 5)


def _rational_potential(s, x):
    return 0.5 * s.omega0 ** 2 * x ** 2 / (1 - s.lam * x)


def _power_prefactor(s):
    a = s.params.get('a', 1.0)
    return a ** 2 * (s.lam + 1) ** 2


def _power_mass(s, x):
    return _power_prefactor(s) * x ** (2 * s.lam)


def _power_d1(s, x):
    nu = s.lam
    return 2 * nu * _power_prefactor(s) * x ** (2 * nu - 1)


def _power_d2(s, x):
    nu = s.lam
    return 2 * nu * (2 * nu - 1) * _power_prefactor(s) * x ** (2 * nu - 2)


def _power_potential(s, x):
    a = s.params.get('a', 1.0)
    return 0.5 * s.omega0 ** 2 * a ** 2 * x ** (2 * s.lam + 2)


def _harmonic_mass(s, x):
    return np.ones_like(x)


def _harmonic_zero(s, x):
    return np.zeros_like(x)


def _harmonic_potential(s, x):
    return 0.5 * s.omega0 ** 2 * x ** 2


_FORMS = {
    SystemId.EXP: (_exp_mass, _exp_d1, _exp_d2, _exp_potential),
    SystemId.NONPOLY: (_nonpoly_mass, _nonpoly_d1, _nonpoly_d2, _nonpoly_potential),
    SystemId.SEXTIC: (_sextic_mass, _sextic_d1, _sextic_d2, _sextic_potential),
    SystemId.LOG: (_log_mass, _log_d1, _log_d2, _log_potential),
    SystemId.RATIONAL: (_rational_mass, _rational_d1, _rational_d2, _rational_potential),
    SystemId.POWER: (_power_mass, _power_d1, _power_d2, _power_potential),
    SystemId.HARMONIC: (_harmonic_mass, _harmonic_zero, _harmonic_zero, _harmonic_potential),
}


def make_system(system_id, lam, omega0, hbar=1.0, **params):
    """
    Build a catalog system.

    Args:
        system_id: SystemId or name ('exp', 'nonpoly', 'sextic', ...)
        lam: nonlinearity parameter λ (the exponent ν for 'power')
        omega0: angular frequency, > 0
        hbar: reduced Planck constant, > 0
        **params: extra parameters ('a' for the power-law system)

    Returns:
        PdmSystem

    Raises:
        ValidationError: on a disallowed parameter
    """
    sid = parse_system_id(system_id)
    try:
        lam, omega0, hbar = float(lam), float(omega0), float(hbar)
    except (TypeError, ValueError):
        raise ValidationError('lambda, omega0 and hbar must be numbers')

    if not (math.isfinite(omega0) and omega0 > 0):
        raise ValidationError(f"omega0 must be positive, got {omega0}")
    if not (math.isfinite(hbar) and hbar > 0):
        raise ValidationError(f"hbar must be positive, got {hbar}")
    if not math.isfinite(lam):
        raise ValidationError(f"lambda must be finite, got {lam}")

    if sid in (SystemId.EXP, SystemId.NONPOLY, SystemId.LOG, SystemId.RATIONAL) and lam == 0:
        raise ValidationError(f"lambda must be non-zero for the {sid.value} system")
    if sid is SystemId.SEXTIC and lam < 0:
        raise ValidationError('lambda must be >= 0 for the sextic system')
    if sid is SystemId.POWER:
        if lam <= -1:
            raise ValidationError('the power-law exponent (lambda) must exceed -1')
        try:
            a = float(params.get('a', 1.0))
        except (TypeError, ValueError):
            raise ValidationError('the power-law amplitude a must be a number')
        if a == 0 or not math.isfinite(a):
            raise ValidationError('the power-law amplitude a must be finite and non-zero')
        params = {'a': a}
    elif params:
        raise ValidationError(f"unexpected parameters for {sid.value}: {sorted(params)}")

    return PdmSystem(id=sid, lam=lam, omega0=omega0, hbar=hbar, params=dict(params))


def system_from_config(config):
    """
    Build a system from a JSON-style mapping.

    Example:
        {"system": "exp", "lambda": 1.0, "omega0": 2.0, "hbar": 1.0}
    """
    if not isinstance(config, dict):
        raise ConfigError('system config must be a JSON object')
    try:
        name = config['system']
    except KeyError:
        raise ConfigError("system config needs a 'system' key")
    extra = {k: v for k, v in config.items() if k not in ('system', 'lambda', 'omega0', 'hbar')}
    return make_system(
        name,
        config.get('lambda', 0.0 if parse_system_id(name) is SystemId.HARMONIC else 1.0),
        config.get('omega0', 1.0),
        config.get('hbar', 1.0),
        **extra,
    )
