"""
Kinetic-energy ordering algebra

An ordering is a weighted sum of m^α p m^β p m^γ terms with α+β+γ = -1 and
weights summing to one. Everything downstream only sees the weighted averages
(ᾱ, β̄, γ̄, mean of αγ) and the similarity exponent η = (γ̄ - ᾱ)/2.
"""

from collections import namedtuple
from dataclasses import dataclass

from .utils import ConfigError, ValidationError

TOLERANCE = 1e-12

Term = namedtuple('Term', ['w', 'alpha', 'beta', 'gamma'])


@dataclass(frozen=True)
class OrderingScheme:
    """Weighted list of (w, α, β, γ) terms"""

    terms: tuple
    name: str = 'custom'

    def validate(self):
        """Raise ValidationError unless every term sums to -1 and weights sum to 1"""
        if not self.terms:
            raise ValidationError('an ordering needs at least one term')
        for i, t in enumerate(self.terms):
            total = t.alpha + t.beta + t.gamma
            if abs(total + 1) > TOLERANCE:
                raise ValidationError(
                    f"term {i}: alpha + beta + gamma must equal -1, got {total!r}"
                )
        weight = sum(t.w for t in self.terms)
        if abs(weight - 1) > TOLERANCE:
            raise ValidationError(f"ordering weights must sum to 1, got {weight!r}")
        return self

    def mix(self, other, p):
        """Concatenate two schemes with weights p and 1 - p"""
        terms = tuple(Term(p * t.w, t.alpha, t.beta, t.gamma) for t in self.terms)
        terms += tuple(Term((1 - p) * t.w, t.alpha, t.beta, t.gamma) for t in other.terms)
        return OrderingScheme(terms, name=f'mix({self.name},{other.name},{p})')

    def to_dict(self):
        return {
            'name': self.name,
            'terms': [
                {'w': t.w, 'alpha': t.alpha, 'beta': t.beta, 'gamma': t.gamma}
                for t in self.terms
            ],
        }


@dataclass(frozen=True)
class OrderingAggregate:
    """Weighted averages of an ordering scheme"""

    abar: float
    bbar: float
    gbar: float
    agbar: float
    eta: float

    @property
    def is_hermitian(self):
        return abs(self.eta) < TOLERANCE

    def swapped(self):
        """Aggregate with ᾱ and γ̄ exchanged"""
        return OrderingAggregate(
            abar=self.gbar, bbar=self.bbar, gbar=self.abar,
            agbar=self.agbar, eta=(self.abar - self.gbar) / 2,
        )

    def to_dict(self):
        return {
            'abar': self.abar, 'bbar': self.bbar, 'gbar': self.gbar,
            'agbar': self.agbar, 'eta': self.eta,
        }


def aggregate(scheme):
    """
    Reduce a scheme to its aggregate.

    Raises:
        ValidationError: the scheme breaks α+β+γ = -1 or Σw = 1
    """
    scheme.validate()
    abar = sum(t.w * t.alpha for t in scheme.terms)
    bbar = sum(t.w * t.beta for t in scheme.terms)
    gbar = sum(t.w * t.gamma for t in scheme.terms)
    agbar = sum(t.w * t.alpha * t.gamma for t in scheme.terms)
    return OrderingAggregate(abar=abar, bbar=bbar, gbar=gbar, agbar=agbar, eta=(gbar - abar) / 2)


# -- solvability functionals --------------------------------------------

def constraint_A(agg):
    """A = -4⟨αγ⟩ - (γ̄-ᾱ)² - 2(γ̄+ᾱ); the exponential system is exact at A = 3/4"""
    return -4 * agg.agbar - (agg.gbar - agg.abar) ** 2 - 2 * (agg.gbar + agg.abar)


def is_exact_exp(agg):
    return abs(constraint_A(agg) - 0.75) < TOLERANCE


def constraint_B_nonpoly(agg):
    """B = -16⟨αγ⟩ - 4(γ̄-ᾱ)² - 6(γ̄+ᾱ); the nonpolynomial system is exact at B = 2"""
    return -16 * agg.agbar - 4 * (agg.gbar - agg.abar) ** 2 - 6 * (agg.gbar + agg.abar)


def is_exact_nonpoly(agg):
    return abs(constraint_B_nonpoly(agg) - 2) < TOLERANCE


def constraints_appB(agg):
    """(A, B) pair entering the sextic system's Schrödinger equation"""
    s = agg.abar + agg.gbar
    q = (agg.gbar - agg.abar) ** 2
    a = -36 * agg.agbar - 15 * s - 9 * q
    b = 36 * agg.agbar + 12 * s + 9 * q
    return a, b


# -- named schemes -------------------------------------------------------

def von_roos(alpha, gamma):
    """Symmetrized von Roos ordering ½(m^α p m^β p m^γ + m^γ p m^β p m^α)"""
    beta = -1.0 - alpha - gamma
    return OrderingScheme(
        (Term(0.5, alpha, beta, gamma), Term(0.5, gamma, beta, alpha)),
        name=f'vonroos({alpha!r},{gamma!r})',
    )


def gora_williams():
    return OrderingScheme((Term(0.5, -1.0, 0.0, 0.0), Term(0.5, 0.0, 0.0, -1.0)), name='gora-williams')


def bendaniel_duke():
    return OrderingScheme((Term(1.0, 0.0, -1.0, 0.0),), name='bendaniel-duke')


def zhu_kroemer():
    return OrderingScheme((Term(1.0, -0.5, 0.0, -0.5),), name='zhu-kroemer')


def mustafa_mazharimousavi():
    return OrderingScheme((Term(1.0, -0.25, -0.5, -0.25),), name='mustafa-mazharimousavi')


def solve_vonroos_for_A34(gamma):
    """
    α making the von Roos ordering exact for the exponential system.

    Solves 2αγ + α + γ = -3/8, i.e. α = (-3/8 - γ)/(1 + 2γ).

    Raises:
        ValidationError: γ = -1/2, where no α exists
    """
    denom = 1 + 2 * gamma
    if abs(denom) < TOLERANCE:
        raise ValidationError('gamma = -1/2 admits no alpha with A = 3/4')
    return (-0.375 - gamma) / denom


def solve_vonroos_for_B2(gamma):
    """
    α making the von Roos ordering exact for the nonpolynomial system.

    Solves 8αγ + 3(α + γ) = -1, i.e. α = (-1 - 3γ)/(8γ + 3).
    """
    denom = 8 * gamma + 3
    if abs(denom) < TOLERANCE:
        raise ValidationError('gamma = -3/8 admits no alpha with B = 2')
    return (-1 - 3 * gamma) / denom


def scheme_for_appB(A, B):
    """
    Two-term Hermitian scheme whose sextic-system functionals equal (A, B).

    With ᾱ = γ̄ = s/2 the functionals give s = -(A+B)/3 and ⟨αγ⟩ = (B-12s)/36;
    the terms (s/2 ± 1, s/2 ± c) realize any ⟨αγ⟩ through c.
    """
    s = -(A + B) / 3
    t = (B - 12 * s) / 36
    c = t - s * s / 4
    half = s / 2
    terms = []
    for sign in (1, -1):
        alpha, gamma = half + sign, half + sign * c
        terms.append(Term(0.5, alpha, -1.0 - alpha - gamma, gamma))
    return OrderingScheme(tuple(terms), name=f'appB(A={A!r},B={B!r})')


def preset(name):
    """
    Resolve a named ordering.

    Accepted forms:
        vonroos, vonroos:a34, vonroos:a34:<gamma>   exact for the exponential system
        vonroos:b2, vonroos:b2:<gamma>              exact for the nonpolynomial system
        vonroos:<alpha>,<gamma>                     explicit exponents
        gora-williams, bendaniel-duke, zhu-kroemer, mustafa-mazharimousavi
    """
    key = name.strip().lower()
    fixed = {
        'gora-williams': gora_williams,
        'bendaniel-duke': bendaniel_duke,
        'zhu-kroemer': zhu_kroemer,
        'mustafa-mazharimousavi': mustafa_mazharimousavi,
    }
    if key in fixed:
        return fixed[key]()

    parts = key.split(':')
    if parts[0] != 'vonroos':
        raise ConfigError(f"Unknown ordering preset {name!r}")
    try:
        if len(parts) == 1 or parts[1] in ('a34', 'b2'):
            mode = parts[1] if len(parts) > 1 else 'a34'
            gamma = float(parts[2]) if len(parts) > 2 else 0.0
            solve = solve_vonroos_for_A34 if mode == 'a34' else solve_vonroos_for_B2
            scheme = von_roos(solve(gamma), gamma)
            return OrderingScheme(scheme.terms, name=f'vonroos:{mode}:{gamma!r}')
        alpha, gamma = (float(v) for v in parts[1].split(','))
        return von_roos(alpha, gamma)
    except ValueError:
        raise ConfigError(f"Bad von Roos preset {name!r}")


def scheme_from_config(config):
    """Build a scheme from a preset string or {"terms": [{"w", "alpha", "beta", "gamma"}, ...]}"""
    if isinstance(config, OrderingScheme):
        return config
    if isinstance(config, str):
        return preset(config)
    if not isinstance(config, dict) or 'terms' not in config:
        raise ConfigError("ordering must be a preset name or an object with 'terms'")
    try:
        terms = tuple(
            Term(float(t['w']), float(t['alpha']), float(t['beta']), float(t['gamma']))
            for t in config['terms']
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Bad ordering term: {e}")
    return OrderingScheme(terms, name=config.get('name', 'custom'))
