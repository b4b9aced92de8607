"""
Polynomial (quasi-exact) solutions by the functional Bethe ansatz

Problems have the form

    a(z) S'' + b(z) S' + (c0 + c1 z) S = 0,
    a = a0 + a1 z + a2 z² + a3 z³,   b = b0 + b1 z + b2 z²

and we look for S(z) = Π (z - z_i) of degree n. A degree-n solution needs
c1 = -n b2 - n(n-1) a3; the roots then satisfy

    a(z_i) Σ_{j≠i} 2/(z_i - z_j) + b(z_i) = 0,

and c0 = -(2(n-1) a3 + b2) Σ z_i - n b1.
"""

import math
import sys
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, special

from .catalog import SystemId
from .ordering import TOLERANCE, constraint_A, constraint_B_nonpoly, constraints_appB
from .utils import (
    BetheConvergenceError,
    QuadratureError,
    ReductionUnavailableError,
    ValidationError,
    resolve_seed,
)


@dataclass(frozen=True)
class BetheProblem:
    """
    One ODE of the template above, plus how to read an energy off c1.

    c0 or c1 may be None: c1 then takes its required value for `degree`, and a
    missing c0 is reported as the value the roots imply. The energy is
    energy_scale * c1 + energy_shift.
    """

    a: tuple
    b: tuple
    c0: float = None
    c1: float = None
    degree: int = 0
    energy_scale: float = None
    energy_shift: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.degree < 0:
            raise ValidationError(f"polynomial degree must be >= 0, got {self.degree}")
        if len(self.a) != 4 or len(self.b) != 3:
            raise ValidationError('a needs four coefficients (a0..a3) and b three (b0..b2)')

    @property
    def required_c1(self):
        n = self.degree
        return -n * self.b[2] - n * (n - 1) * self.a[3]

    def implied_c0(self, roots):
        n = self.degree
        return -(2 * (n - 1) * self.a[3] + self.b[2]) * complex(np.sum(roots)) - n * self.b[1]

    def with_degree(self, degree):
        return BetheProblem(self.a, self.b, self.c0, self.c1, degree,
                            self.energy_scale, self.energy_shift, dict(self.meta))

    def energy(self):
        if self.energy_scale is None:
            return None
        return self.energy_scale * self.required_c1 + self.energy_shift


@dataclass(frozen=True)
class BetheSolution:
    degree: int
    roots: np.ndarray
    c0: complex
    energy: float
    residuals: dict
    meta: dict = field(default_factory=dict)

    @property
    def is_real(self):
        return bool(np.all(np.abs(np.imag(self.roots)) < 1e-9))

    def to_dict(self):
        roots = [float(r.real) for r in self.roots] if self.is_real else list(self.roots)
        return {
            'n': self.degree,
            'd': self.meta.get('d'),
            'roots': roots,
            'real_roots': self.is_real,
            'c0': self.c0.real if abs(self.c0.imag) < 1e-12 else self.c0,
            'energy': self.energy,
            'residuals': self.residuals,
        }


# -- residuals --------------------------------------------------------------

def _poly(coeffs, z):
    return sum(c * z ** k for k, c in enumerate(coeffs))


def _dpoly(coeffs, z):
    return sum(k * c * z ** (k - 1) for k, c in enumerate(coeffs) if k)


def bethe_equations(problem, roots):
    """G_i = a(z_i) Σ_{j≠i} 2/(z_i - z_j) + b(z_i)"""
    z = np.asarray(roots, dtype=complex)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    inv = 2.0 / diff
    np.fill_diagonal(inv, 0.0)
    return _poly(problem.a, z) * inv.sum(axis=1) + _poly(problem.b, z)


def bethe_jacobian(problem, roots):
    z = np.asarray(roots, dtype=complex)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    inv = 2.0 / diff
    inv2 = 2.0 / diff ** 2
    np.fill_diagonal(inv, 0.0)
    np.fill_diagonal(inv2, 0.0)
    a_z = _poly(problem.a, z)
    jac = a_z[:, None] * inv2
    diag = _dpoly(problem.a, z) * inv.sum(axis=1) - a_z * inv2.sum(axis=1) + _dpoly(problem.b, z)
    np.fill_diagonal(jac, diag)
    return jac


def coefficient_residual(problem, roots, c0=None):
    """
    Expand S = Π(z - z_i), apply the ODE and return the largest coefficient.

    The result is scaled by the largest coefficient of the three pieces
    a S'', b S' and (c0 + c1 z) S so it is comparable across problems. c0
    defaults to problem.c0, then to the value the roots imply.
    """
    roots = np.asarray(roots, dtype=complex)
    s = P.polyfromroots(roots) if len(roots) else np.array([1.0 + 0j])
    c1 = problem.required_c1 if problem.c1 is None else problem.c1
    if c0 is None:
        c0 = problem.c0 if problem.c0 is not None else problem.implied_c0(roots)
    parts = [
        P.polymul(np.asarray(problem.a, dtype=complex), P.polyder(s, 2)) if len(s) > 2 else np.zeros(1),
        P.polymul(np.asarray(problem.b, dtype=complex), P.polyder(s)) if len(s) > 1 else np.zeros(1),
        P.polymul([c0, c1], s),
    ]
    total = np.zeros(max(len(p) for p in parts), dtype=complex)
    for p in parts:
        total[:len(p)] += p
    scale = max(1.0, *(float(np.max(np.abs(p))) for p in parts))
    return float(np.max(np.abs(total))) / scale


def _residuals(problem, roots):
    n = problem.degree
    r1 = 0.0 if problem.c1 is None else abs(problem.c1 - problem.required_c1)
    implied = problem.implied_c0(roots) if n else 0j
    r2 = 0.0 if problem.c0 is None else abs(problem.c0 - implied)
    bethe = float(np.max(np.abs(bethe_equations(problem, roots)))) if n else 0.0
    return {
        'bethe': bethe,
        'coeff_match': coefficient_residual(problem, roots, c0=implied),
        'c1': r1,
        'B_consistency': r2,
    }, implied


# -- all solutions at once ------------------------------------------------------

def polynomial_solutions(problem):
    """
    Every degree-n polynomial solution from an (n+1)x(n+1) eigenproblem.

    The ODE operator with c0 removed maps polynomials of degree <= n into
    themselves once c1 takes its required value; its eigenvalues are -c0.

    Returns:
        list of (c0, roots) pairs, monic solutions only, sorted by Re c0
    """
    n = problem.degree
    c1 = problem.required_c1
    size = n + 1
    op = np.zeros((size, size), dtype=complex)
    for k in range(size):
        for i, a_i in enumerate(problem.a):
            p = k - 2 + i
            if k >= 2 and 0 <= p < size:
                op[p, k] += a_i * k * (k - 1)
        for i, b_i in enumerate(problem.b):
            p = k - 1 + i
            if k >= 1 and 0 <= p < size:
                op[p, k] += b_i * k
        if k + 1 < size:
            op[k + 1, k] += c1
    values, vectors = np.linalg.eig(op)
    out = []
    for value, vec in zip(values, vectors.T):
        if abs(vec[n]) < 1e-12 * np.max(np.abs(vec)):
            continue
        monic = vec / vec[n]
        roots = P.polyroots(monic) if n else np.array([], dtype=complex)
        out.append((-value, np.asarray(roots, dtype=complex)))
    out.sort(key=lambda item: (item[0].real, item[0].imag))
    return out


# -- Newton solver -----------------------------------------------------------------

class BetheSolver:
    """
    Damped Newton on the Bethe equations from a deterministic list of seeds.

    Seeds, in order: Hermite zeros mapped into (0.1, 0.9); random
    perturbations of those; the roots of polynomial_solutions(). When the
    problem fixes c0 the converged root set closest to it wins, otherwise the
    first one found.
    """

    def __init__(self, seed=None, perturbations=10, max_iter=100, tol=1e-12, verbose=False):
        self.seed = resolve_seed(seed)
        self.perturbations = perturbations
        self.max_iter = max_iter
        self.tol = tol
        self.verbose = verbose

    def log(self, message):
        """Print verbose log messages"""
        if self.verbose:
            print(f"[pdm-spectra] {message}", file=sys.stderr)

    def seeds(self, problem):
        n = problem.degree
        t = special.roots_hermite(n)[0] if n > 1 else np.zeros(n)
        span = np.max(np.abs(t)) if n > 1 else 1.0
        base = 0.5 + 0.4 * t / span
        rng = np.random.default_rng(self.seed)
        out = [base.astype(complex)]
        for _ in range(self.perturbations):
            out.append(base + 0.1 * rng.standard_normal(n) + 0.05j * rng.standard_normal(n))
        out.extend(roots for _, roots in polynomial_solutions(problem))
        return out

    def newton(self, problem, start):
        """
        Returns:
            (roots, max |G|) after convergence or max_iter steps
        """
        z = np.array(start, dtype=complex)
        g = bethe_equations(problem, z)
        norm = np.max(np.abs(g))
        for _ in range(self.max_iter):
            if norm < self.tol * (1 + np.max(np.abs(z))):
                break
            try:
                step = np.linalg.solve(bethe_jacobian(problem, z), -g)
            except np.linalg.LinAlgError:
                break
            damping = 1.0
            while damping > 1e-6:
                trial = z + damping * step
                g_trial = bethe_equations(problem, trial)
                norm_trial = np.max(np.abs(g_trial))
                if np.isfinite(norm_trial) and norm_trial < norm:
                    break
                damping /= 2
            else:
                break
            z, g, norm = trial, g_trial, norm_trial
        return z, float(norm)

    def solve_all(self, problem):
        """
        Every distinct converged root set.

        Returns:
            list of BetheSolution in seed order
        """
        if problem.degree == 0:
            return [self._finish(problem, np.array([], dtype=complex))]
        found, best = [], math.inf
        for i, start in enumerate(self.seeds(problem)):
            roots, norm = self._refine(problem, start)
            best = min(best, norm)
            if roots is None:
                continue
            key = np.sort_complex(np.round(roots, 8))
            if any(np.allclose(key, other, atol=1e-7) for other, _ in found):
                continue
            self.log(f"seed {i}: converged, max|G| = {norm:.2e}")
            found.append((key, self._finish(problem, np.sort_complex(roots))))
        if not found:
            raise BetheConvergenceError(
                f"no seed converged for degree {problem.degree}; best residual {best:.3e}",
                best_residual=best,
            )
        return [solution for _, solution in found]

    def solve(self, problem):
        """
        Best root set for the problem.

        Raises:
            BetheConvergenceError: every seed failed or collapsed
        """
        solutions = self.solve_all(problem)
        if problem.c0 is None:
            return solutions[0]
        return min(solutions, key=lambda s: s.residuals['B_consistency'])

    def _refine(self, problem, start):
        if problem.degree == 1:
            # No interaction term: the root is a zero of b(z)
            candidates = P.polyroots(np.asarray(problem.b, dtype=complex))
            pick = candidates[np.argmin(np.abs(candidates - start[0]))]
            return np.array([pick]), float(abs(_poly(problem.b, pick)))
        roots, norm = self.newton(problem, start)
        if not np.all(np.isfinite(roots)):
            return None, math.inf
        gaps = np.abs(roots[:, None] - roots[None, :]) + np.eye(len(roots))
        if np.min(gaps) < 1e-10:
            return None, norm
        if norm > 1e-9 * (1 + np.max(np.abs(roots))):
            return None, norm
        return roots, norm

    def _finish(self, problem, roots):
        residuals, implied = _residuals(problem, roots)
        return BetheSolution(
            degree=problem.degree,
            roots=roots,
            c0=complex(problem.c0 if problem.c0 is not None else implied),
            energy=problem.energy(),
            residuals=residuals,
            meta=dict(problem.meta),
        )


def solve_bethe(problem, seed=None):
    return BetheSolver(seed=seed).solve(problem)


# -- sextic system ---------------------------------------------------------------

def energy_appB(n, d, omega, hbar=1.0):
    """E_n = (2n + 2d - 1)ħω"""
    return (2 * n + 2 * d - 1) * hbar * omega


def appb_exponents(A):
    """Both roots of 4d² - 10d + A = 0, larger first"""
    disc = 100 - 16 * A
    if disc < 0:
        raise ReductionUnavailableError(f"reduction unavailable for this ordering: A = {A!r} gives complex d")
    root = math.sqrt(disc)
    return (10 + root) / 8, (10 - root) / 8


def _kappa(system):
    return system.omega0 / (system.hbar * system.lam)


def _check_sextic(system):
    if system.id is not SystemId.SEXTIC or system.lam <= 0:
        raise ValidationError('the reduction needs the sextic system with lambda > 0')


def reduce_appB(system, agg, degree=0, branch='auto'):
    """
    Reduce the sextic system to the polynomial template in z = 1/(1+λx²).

    ψ = e^{κz/2} z^d S(z) with κ = ω/(ħλ) and 4d² - 10d + A = 0. The 'auto'
    branch takes the larger d when z^d keeps ψ square integrable (d > 1/4),
    else the smaller.

    Returns:
        (d, BetheProblem)

    Raises:
        ReductionUnavailableError: complex d, or no normalizable branch
    """
    _check_sextic(system)
    A, B = constraints_appB(agg)
    upper, lower = appb_exponents(A)
    if branch == 'upper':
        d = upper
    elif branch == 'lower':
        d = lower
    else:
        d = next((v for v in (upper, lower) if v > 0.25), None)
        if d is None:
            raise ReductionUnavailableError(f"no normalizable branch for A = {A!r}")
    kappa = _kappa(system)
    hbar = system.hbar
    problem = BetheProblem(
        a=(0.0, 1.0, -1.0, 0.0),
        b=(2 * d - 1.5, 1 - 2 * d + kappa, -kappa),
        c0=B / 4 - kappa * (0.75 - d) - d * (d - 2),
        degree=degree,
        energy_scale=2 * hbar ** 2 * system.lam,
        energy_shift=-hbar ** 2 * system.lam * kappa * (1 - 2 * d),
        meta={'kind': 'sextic', 'd': d, 'kappa': kappa, 'A': A, 'B': B},
    )
    return d, problem


def required_B(n, d, kappa, roots):
    """The B for which S with these roots is an exact state: 4[κ(¾ - d - n + Σz) + d(d-2) + (2d-1)n]"""
    total = complex(np.sum(roots)) if n else 0j
    value = 4 * (kappa * (0.75 - d - n + total) + d * (d - 2) + (2 * d - 1) * n)
    return value.real if abs(value.imag) < 1e-12 else value


def appb_eigenfunction(system, d, roots):
    """Unnormalized ψ(x) = e^{κz/2} z^d S(z), z = 1/(1+λx²) (real part)"""
    kappa = _kappa(system)
    coeffs = P.polyfromroots(roots) if len(roots) else np.array([1.0])

    def psi(x):
        x = np.asarray(x, dtype=float)
        z = 1 / (1 + system.lam * x ** 2)
        value = np.real(np.exp(kappa * z / 2) * z ** d * P.polyval(z, coeffs))
        return value if value.ndim else float(value)

    return psi


def appb_norm(system, d, roots):
    """
    sqrt(∫ ψ² dx) for the real function appb_eigenfunction returns, integrated in z.

    dx = z^{-3/2}(1-z)^{-1/2} dz / (2√λ) on each half line, so the integral is
    an algebraic-weight quadrature on (0, 1) that exists iff d > 1/4.

    Raises:
        ValidationError: d <= 1/4 (not normalizable)
        QuadratureError: quadrature missed its tolerance
    """
    _check_sextic(system)
    if d <= 0.25:
        raise ValidationError(f"d = {d!r} gives a non-normalizable state")
    kappa = _kappa(system)
    coeffs = P.polyfromroots(roots) if len(roots) else np.array([1.0])

    def integrand(z):
        return math.exp(kappa * z) * np.real(P.polyval(z, coeffs)) ** 2

    value, abserr = integrate.quad(integrand, 0.0, 1.0, weight='alg', wvar=(2 * d - 1.5, -0.5),
                                   epsabs=1e-13, epsrel=1e-11, limit=200)
    if abserr > 1e-8 * max(1.0, abs(value)):
        raise QuadratureError(f"normalization quadrature error {abserr:.3e}", abserr=abserr)
    return math.sqrt(value / math.sqrt(system.lam))


# -- Heun branches of the exactly solvable systems ------------------------------------

def heun_exponent(system_id, agg):
    """
    d values of the alternate branch for an ordering.

    exp: A = -d(d-2), so d = 1 ± sqrt(1-A); nonpoly: B = -d(d-3), so
    d = (3 ± sqrt(9-4B))/2. Larger root first.
    """
    if system_id is SystemId.EXP:
        disc = 1 - constraint_A(agg)
        if disc < 0:
            raise ReductionUnavailableError('A > 1 gives complex d')
        return 1 + math.sqrt(disc), 1 - math.sqrt(disc)
    if system_id is SystemId.NONPOLY:
        disc = 9 - 4 * constraint_B_nonpoly(agg)
        if disc < 0:
            raise ReductionUnavailableError('B > 9/4 gives complex d')
        return (3 + math.sqrt(disc)) / 2, (3 - math.sqrt(disc)) / 2
    raise ValidationError(f"no Heun branch for the {system_id.value} system")


def heun_reductions(system, d, degree=0, agg=None):
    """
    Biconfluent-Heun problem of an exactly solvable system for exponent d.

    exp (μ = ω₀/ħ, z = e^{λx}):
        a = (0, 1, 0, 0), b = (2d-1, 2μ, -2μ), c0 = μ(2d-1), E = ħω₀(n + d)
    nonpoly (μ = ω₀/(ħλ²)):
        a = (0, 1, 0, 0), b = (2(d-1), 2μ, -2μ), c0 = 2μ(d-1), E = ħω₀(n + d - ½)

    d = ½ and d = 1 give back the Hermite branch.

    Raises:
        ReductionUnavailableError: agg given and A ≠ -d(d-2) (exp) or B ≠ -d(d-3) (nonpoly)
    """
    hbar = system.hbar
    if system.id is SystemId.EXP:
        if agg is not None and abs(constraint_A(agg) + d * (d - 2)) > TOLERANCE:
            raise ReductionUnavailableError(f"A = {constraint_A(agg)!r} differs from -d(d-2) at d = {d!r}")
        mu = system.omega0 / hbar
        return BetheProblem(
            a=(0.0, 1.0, 0.0, 0.0),
            b=(2 * d - 1, 2 * mu, -2 * mu),
            c0=mu * (2 * d - 1),
            degree=degree,
            energy_scale=hbar ** 2 / 2,
            energy_shift=hbar ** 2 * mu * d,
            meta={'kind': 'heun-exp', 'd': d, 'mu': mu},
        )
    if system.id is SystemId.NONPOLY:
        if agg is not None and abs(constraint_B_nonpoly(agg) + d * (d - 3)) > TOLERANCE:
            raise ReductionUnavailableError(
                f"B = {constraint_B_nonpoly(agg)!r} differs from -d(d-3) at d = {d!r}"
            )
        lam2 = system.lam ** 2
        mu = system.omega0 / (hbar * lam2)
        return BetheProblem(
            a=(0.0, 1.0, 0.0, 0.0),
            b=(2 * (d - 1), 2 * mu, -2 * mu),
            c0=2 * mu * (d - 1),
            degree=degree,
            energy_scale=hbar ** 2 * lam2 / 2,
            energy_shift=-(hbar ** 2) * lam2 * mu * (1 - 2 * d) / 2,
            meta={'kind': 'heun-nonpoly', 'd': d, 'mu': mu},
        )
    raise ValidationError(f"no Heun branch for the {system.id.value} system")


def hermite_problem(n):
    """S'' - 2z S' + 2n S = 0 in template form; its degree-n solution has the zeros of H_n"""
    return BetheProblem(a=(1.0, 0.0, 0.0, 0.0), b=(0.0, -2.0, 0.0), c0=2.0 * n, c1=0.0, degree=n,
                        meta={'kind': 'hermite'})
