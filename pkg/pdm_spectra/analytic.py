"""
Closed-form eigenpairs of the two exactly solvable systems

Both eigenfunction families are Hermite functions of a stretched coordinate
τ(x) times an envelope:

    exponential:    ψ_n = C_n e^{λx/2} h_n(τ),    τ = √μ (e^{λx} - 1)
    nonpolynomial:  ψ_n = C_n h_n(τ) / (1+λx),   τ = √μ x / (1+λx)

with μ = ω₀/ħ and h_n the orthonormal Hermite function. τ sweeps only part of
the real line (τ > -√μ, or τ < √μ/λ), so C_n is fixed by quadrature over that
window rather than by the full-line normalization.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate

from .catalog import EXACT_SYSTEMS, SystemId
from .ordering import constraint_A, constraint_B_nonpoly, is_exact_exp, is_exact_nonpoly
from .utils import QuadratureError, ValidationError

# Beyond |τ| = √(2n+1) + _TAIL the Hermite function is below double-precision underflow
_TAIL = 38.0


class Measure(str, Enum):
    LEBESGUE = 'dx'
    MASS_WEIGHTED = 'm^(2eta)dx'


@dataclass(frozen=True)
class EigenSolution:
    """One closed-form eigenpair"""

    n: int
    energy: float
    psi: object
    norm_const: float
    measure: Measure = Measure.LEBESGUE
    support: tuple = (-math.inf, math.inf)
    eta: float = 0.0
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.psi(x)


# -- Hermite polynomials and functions ----------------------------------

def hermite(n, t):
    """
    Physicists' Hermite polynomial H_n(t) by upward recurrence.

    H_{k+1} = 2t H_k - 2k H_{k-1}
    """
    if n < 0:
        raise ValidationError(f"Hermite degree must be >= 0, got {n}")
    t = np.asarray(t, dtype=float)
    prev, cur = np.ones_like(t), 2 * t
    if n == 0:
        return prev if prev.ndim else float(prev)
    for k in range(1, n):
        prev, cur = cur, 2 * t * cur - 2 * k * prev
    return cur if cur.ndim else float(cur)


def hermite_function(n, t):
    """
    Orthonormal Hermite function h_n(t) = H_n(t) e^{-t²/2} / sqrt(2^n n! √π).

    Uses the normalized three-term recurrence so it stays finite for large n.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) <= math.sqrt(2 * n + 1) + _TAIL
    ti = t[inside]
    prev = np.pi ** -0.25 * np.exp(-ti ** 2 / 2)
    if n == 0:
        out[inside] = prev
        return out if out.ndim else float(out)
    cur = math.sqrt(2) * ti * prev
    for k in range(1, n):
        prev, cur = cur, math.sqrt(2 / (k + 1)) * ti * cur - math.sqrt(k / (k + 1)) * prev
    out[inside] = cur
    return out if out.ndim else float(out)


# -- spectrum -----------------------------------------------------------

def check_exact(system, agg):
    """Raise ValidationError unless `system` is exactly solvable under `agg`"""
    if system.id not in EXACT_SYSTEMS:
        raise ValidationError(f"the {system.id.value} system has no closed-form spectrum")
    if agg is None:
        return
    if system.id is SystemId.EXP and not is_exact_exp(agg):
        raise ValidationError(f"ordering gives A = {constraint_A(agg)!r}; the exponential system needs A = 3/4")
    if system.id is SystemId.NONPOLY and not is_exact_nonpoly(agg):
        raise ValidationError(
            f"ordering gives B = {constraint_B_nonpoly(agg)!r}; the nonpolynomial system needs B = 2"
        )


def energy(n, system, agg=None):
    """E_n = (n + ½)ħω₀ for both exact systems; λ and the ordering do not enter"""
    if n < 0:
        raise ValidationError(f"quantum number must be >= 0, got {n}")
    check_exact(system, agg)
    return (n + 0.5) * system.hbar * system.omega0


# -- stretched coordinate -------------------------------------------------

def _mu(system):
    return system.omega0 / system.hbar


def tau_window(system):
    """Range of τ(x) as x sweeps the support"""
    root_mu = math.sqrt(_mu(system))
    if system.id is SystemId.EXP:
        return (-root_mu, math.inf)
    edge = root_mu / system.lam
    return (-math.inf, edge) if system.lam > 0 else (edge, math.inf)


def tau(system, x):
    x = np.asarray(x, dtype=float)
    root_mu = math.sqrt(_mu(system))
    if system.id is SystemId.EXP:
        with np.errstate(over='ignore'):
            return root_mu * np.expm1(system.lam * x)
    with np.errstate(divide='ignore', invalid='ignore'):
        return root_mu * x / (1 + system.lam * x)


def x_from_tau(system, t):
    """Inverse of tau(); t must lie inside tau_window(system)"""
    t = np.asarray(t, dtype=float)
    root_mu = math.sqrt(_mu(system))
    if system.id is SystemId.EXP:
        return np.log1p(t / root_mu) / system.lam
    y = t / root_mu
    return y / (1 - system.lam * y)


def _quad(func, a, b, what):
    value, abserr = integrate.quad(func, a, b, epsabs=1e-14, epsrel=1e-12, limit=400)
    if not np.isfinite(value) or abserr > 1e-11 * max(1.0, abs(value)):
        raise QuadratureError(f"{what}: quadrature error estimate {abserr:.3e} too large", abserr=abserr)
    return value


def _clip_window(n, lo, hi):
    reach = math.sqrt(2 * n + 1) + _TAIL
    return max(lo, -reach), min(hi, reach)


def window_weight(n, system):
    """∫ h_n(τ)² dτ over the τ window of the physical support"""
    lo, hi = _clip_window(n, *tau_window(system))
    if lo >= hi:
        return 0.0
    pieces = [p for p in (lo, 0.0, hi) if lo <= p <= hi]
    total = 0.0
    for a, b in zip(pieces, pieces[1:]):
        if b > a:
            total += _quad(lambda s: hermite_function(n, s) ** 2, a, b, f'window weight n={n}')
    return total


def boundary_leakage(n, system):
    """
    Weight of the full-line Hermite function outside the physical τ window.

    This is the amount by which the closed forms miss being an orthonormal
    eigenbasis of the Dirichlet problem; it is e^{-ω₀/ħ}-small for the
    exponential system and e^{-c²}-small (c = √(ω₀/ħ)/|λ|) for the other.
    """
    lo, hi = tau_window(system)
    reach = math.sqrt(2 * n + 1) + _TAIL
    total = 0.0
    if lo > -reach:
        total += _quad(lambda s: hermite_function(n, s) ** 2, -reach, lo, f'leakage n={n}')
    if hi < reach:
        total += _quad(lambda s: hermite_function(n, s) ** 2, hi, reach, f'leakage n={n}')
    return total


def _log_hermite_norm(n):
    # log sqrt(2^n n! √π)
    return 0.5 * (n * math.log(2) + math.lgamma(n + 1) + 0.5 * math.log(math.pi))


def _scale(n, system):
    """C_n: the prefactor of h_n that makes ∫|ψ_n|² dx = 1"""
    mu = _mu(system)
    weight = window_weight(n, system)
    if weight <= 0:
        raise QuadratureError(f"level {n} has no weight inside the physical region", abserr=0.0)
    if system.id is SystemId.EXP:
        return math.sqrt(abs(system.lam) * math.sqrt(mu) / weight)
    return math.sqrt(math.sqrt(mu) / weight)


def normalize(n, system, agg=None):
    """
    N_n, the constant in front of the Hermite-polynomial closed form.

    For the exponential system
        ψ_n = N_n exp(-(μ/2)e^{2λx} + μe^{λx}) e^{λx/2} H_n(τ)
    and for the nonpolynomial one
        ψ_n = N_n exp(-τ²/2) H_n(τ) / (1+λx).

    Computed by quadrature over the τ window (u = e^{λx}, resp. x/(1+λx),
    substituted out), so ∫|ψ_n|² dx = 1 to quadrature accuracy.

    Raises:
        ValidationError: the system/ordering is not exactly solvable
        QuadratureError: the integral did not converge
    """
    check_exact(system, agg)
    log_c = math.log(_scale(n, system)) - _log_hermite_norm(n)
    if system.id is SystemId.EXP:
        log_c -= _mu(system) / 2
    return math.exp(log_c)


# -- eigenfunctions -------------------------------------------------------

def psi_exp(n, x, system, scale=None):
    """
    ψ_n of the exponential system at x.

    Args:
        scale: C_n from a previous call (skips the quadrature)
    """
    if system.id is not SystemId.EXP:
        raise ValidationError('psi_exp needs the exponential system')
    c = _scale(n, system) if scale is None else scale
    x = np.asarray(x, dtype=float)
    lx = np.minimum(system.lam * x, 700.0)
    with np.errstate(over='ignore', invalid='ignore'):
        value = c * np.exp(lx / 2) * hermite_function(n, math.sqrt(_mu(system)) * np.expm1(lx))
    value = np.where(np.isfinite(value), value, 0.0)
    return value if value.ndim else float(value)


def psi_nonpoly(n, x, system, scale=None):
    """ψ_n of the nonpolynomial system; exactly zero on the far side of x = -1/λ"""
    if system.id is not SystemId.NONPOLY:
        raise ValidationError('psi_nonpoly needs the nonpolynomial system')
    c = _scale(n, system) if scale is None else scale
    x = np.asarray(x, dtype=float)
    s = 1 + system.lam * x
    inside = s > 0
    value = np.zeros_like(x)
    si = s[inside]
    value[inside] = c * hermite_function(n, math.sqrt(_mu(system)) * x[inside] / si) / si
    return value if value.ndim else float(value)


def _support(system):
    if system.id is SystemId.NONPOLY:
        return system.domain
    return (-math.inf, math.inf)


def exact_solution(n, system, agg=None):
    """
    Build the EigenSolution for level n.

    Raises:
        ValidationError: the system/ordering is not exactly solvable
    """
    e = energy(n, system, agg)
    scale = _scale(n, system)
    evaluate = psi_exp if system.id is SystemId.EXP else psi_nonpoly

    def psi(x):
        return evaluate(n, x, system, scale=scale)

    return EigenSolution(
        n=n,
        energy=e,
        psi=psi,
        norm_const=normalize(n, system),
        support=_support(system),
        meta={'scale': scale, 'leakage': boundary_leakage(n, system)},
    )


def quasi_hermitian_map(solution, system, agg):
    """
    φ̂_n = m^{-η} ψ_n, the eigenfunction of the non-Hermitian ordering.

    The energy and N_n carry over; φ̂_n is normalized under m^{2η}dx.
    """
    if solution.measure is not Measure.LEBESGUE:
        raise ValidationError('quasi_hermitian_map expects a Hermitian-ordering solution')
    if agg.is_hermitian:
        return solution
    eta = agg.eta

    psi = solution.psi

    def phi(x):
        x = np.asarray(x, dtype=float)
        base = psi(x)
        with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
            value = np.where(base == 0, 0.0, system.mass(x) ** -eta * base)
        return value if value.ndim else float(value)

    return EigenSolution(
        n=solution.n,
        energy=solution.energy,
        psi=phi,
        norm_const=solution.norm_const,
        measure=Measure.MASS_WEIGHTED,
        support=solution.support,
        eta=eta,
        meta=dict(solution.meta),
    )


# -- diagnostics -------------------------------------------------------------

def core_range(solution, system, margin=3.0):
    """
    x interval where τ stays within the classically allowed zone plus a margin.

    A finite edge of the τ window is approached no closer than 95% of the way,
    where x is still of order 1/λ.
    """
    lo, hi = tau_window(system)
    reach = math.sqrt(2 * solution.n + 1) + margin
    t_lo = max(-reach, 0.95 * lo) if math.isfinite(lo) else -reach
    t_hi = min(reach, 0.95 * hi) if math.isfinite(hi) else reach
    x_a, x_b = (float(v) for v in x_from_tau(system, [t_lo, t_hi]))
    return (min(x_a, x_b), max(x_a, x_b))


def emission_range(solution, system, tol=1e-10, max_doublings=40):
    """
    Range of x over which |ψ| exceeds tol·max|ψ|.

    Starts from the core zone and walks each end outwards, doubling the step,
    until the amplitude has dropped below tol. A side that reaches the
    singular point of the nonpolynomial system stops just past it so the table
    shows the identically-zero region.

    Returns:
        (x_lo, x_hi, converged) with converged False when a slowly decaying
        tail was cut off after max_doublings.
    """
    x_lo, x_hi = core_range(solution, system)
    sample = np.linspace(x_lo, x_hi, 2001)
    peak = float(np.max(np.abs(solution.psi(sample))))
    width = max(x_hi - x_lo, 1.0 / abs(system.lam))
    singular = system.singular_point if system.id is SystemId.NONPOLY else None
    converged = True

    def walk(start, direction):
        nonlocal converged
        step = width
        x = start
        for _ in range(max_doublings):
            x = start + direction * step
            if singular is not None and direction * (x - singular) >= 0:
                return singular + direction * 0.25 * width
            if abs(float(solution.psi(x))) < tol * peak:
                return x
            step *= 2
        converged = False
        return x

    return walk(x_lo, -1), walk(x_hi, 1), converged


def table_grid(solution, system, points=2001, tol=1e-10):
    """
    Sample points for a wavefunction table.

    Four fifths of the points cover the core zone uniformly; the rest are
    spaced geometrically out to the emission_range() ends, so slowly decaying
    tails are reached without starving the oscillatory region.

    Returns:
        (x, converged)
    """
    x_lo, x_hi, converged = emission_range(solution, system, tol=tol)
    c_lo, c_hi = core_range(solution, system)
    n_tail = max(points // 10, 1)
    n_core = max(points - 2 * n_tail, 2)
    core = np.linspace(c_lo, c_hi, n_core)
    first = (c_hi - c_lo) / (n_core - 1)
    parts = [core]
    if x_lo < c_lo - first:
        parts.append(c_lo - np.geomspace(first, c_lo - x_lo, n_tail))
    if x_hi > c_hi + first:
        parts.append(c_hi + np.geomspace(first, x_hi - c_hi, n_tail))
    return np.unique(np.concatenate(parts)), converged


def count_nodes(values, rel_floor=1e-9):
    """Sign changes of a sampled function, ignoring values below rel_floor·max"""
    values = np.asarray(values, dtype=float)
    floor = rel_floor * np.max(np.abs(values))
    signs = np.sign(values[np.abs(values) > floor])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def overlap(sol_a, sol_b, system, x_range=None):
    """
    ∫ φ_a φ_b dμ evaluated by adaptive quadrature directly in x.

    Used as the independent check of the τ-window normalization; dμ is dx or
    m^{2η}dx according to the solutions' measure. The default range is the
    whole support, split at the core zone; infinite ends go to quad's own
    change of variables, which copes with the 1/x tail of the
    nonpolynomial system.
    """
    if sol_a.measure is not sol_b.measure or sol_a.eta != sol_b.eta:
        raise ValidationError('overlap needs two solutions in the same measure')
    lo, hi = sol_a.support if x_range is None else x_range
    eta = sol_a.eta

    def integrand(x):
        value = sol_a.psi(x) * sol_b.psi(x)
        if value == 0 or eta == 0:
            return value
        with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
            weighted = value * float(system.mass(x)) ** (2 * eta)
        return weighted if math.isfinite(weighted) else 0.0

    core = core_range(sol_a if sol_a.n >= sol_b.n else sol_b, system)
    breaks = [lo] + sorted(p for p in (core[0], 0.0, core[1]) if lo < p < hi) + [hi]
    total, error = 0.0, 0.0
    for a, b in zip(breaks, breaks[1:]):
        if b <= a:
            continue
        value, abserr = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-11, limit=1000)
        total += value
        error += abserr
    if not math.isfinite(total) or error > 1e-9:
        raise QuadratureError(f"overlap quadrature error estimate {error:.3e} too large", abserr=error)
    return total
