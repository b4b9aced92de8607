"""
Finite-difference oracle for the Hermitian PDM Schrödinger operator

    H = -(ħ²/2) d/dx (1/m) d/dx + V_eff(x)

discretized in flux form on a uniform grid with Dirichlet ends, which keeps
the matrix symmetric tridiagonal for every mass profile.
"""

import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize, sparse

from . import analytic
from .catalog import SystemId
from .ordering import OrderingAggregate, aggregate, is_exact_exp, is_exact_nonpoly, scheme_from_config
from .utils import EigenSolverError, ValidationError

DEFAULT_POINTS = 4001

# Extra room, in units of the harmonic length, beyond the last turning point
_WINDOW_MARGIN = 6.5

# Ground-state magnitude at an open end of the exponential window
_PSI_TAIL = 1e-12
# e^{λx} at the wall; the half-line levels move by O(1e-8)ħω₀ beyond it
_Z_FLOOR = 1e-8

_FD_TARGET = 2.5e-5

# Absolute bisection tolerance; stebz then stops on relative interval width
_BISECTION_TOL = 2 * np.finfo(float).tiny


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform grid request.

    `points` counts interior nodes; the Dirichlet ends x_lo, x_hi are not
    unknowns. When `spacing` is set it overrides `points`. Missing ends come
    from default_window(). With `points` left as None the count is at least
    DEFAULT_POINTS and grows until the spacing meets max_spacing().
    """

    points: int = None
    x_lo: float = None
    x_hi: float = None
    spacing: float = None

    def refined(self):
        """Same window with the spacing halved"""
        if self.spacing is not None:
            return GridSpec(self.points, self.x_lo, self.x_hi, self.spacing / 2)
        if self.points is None:
            raise ValidationError("refining needs an explicit point count or spacing")
        return GridSpec(2 * self.points + 1, self.x_lo, self.x_hi)

    def to_dict(self):
        return {'points': self.points, 'x_lo': self.x_lo, 'x_hi': self.x_hi, 'spacing': self.spacing}


@dataclass(frozen=True)
class DiscretizedOperator:
    """Symmetric tridiagonal H on the interior nodes of a uniform grid"""

    grid: np.ndarray
    h: float
    diag: np.ndarray
    offdiag: np.ndarray
    veff: np.ndarray
    w_mid: np.ndarray
    x_lo: float
    x_hi: float
    system: object
    agg: OrderingAggregate

    @property
    def matrix(self):
        """Sparse CSR form; the solver itself only needs diag/offdiag"""
        return sparse.diags([self.offdiag, self.diag, self.offdiag], [-1, 0, 1], format='csr')

    @property
    def kinetic_scale(self):
        return self.system.hbar ** 2 / (2 * self.h ** 2)

    def apply(self, values):
        """
        H applied to a function sampled on [x_lo, grid..., x_hi].

        Boundary samples enter the stencil but are not rows of the result.
        """
        values = np.asarray(values, dtype=float)
        flux = self.w_mid * np.diff(values)
        return -self.kinetic_scale * np.diff(flux) + self.veff * values[1:-1]

    def to_dict(self):
        return {'n': len(self.grid), 'h': self.h, 'x_lo': self.x_lo, 'x_hi': self.x_hi}


# -- effective potential ---------------------------------------------------

def _log_derivatives(system, x):
    """L = m'/m and L' = m''/m - L², from the catalog's closed forms"""
    m = system.mass(x)
    big_l = system.mass_d1(x) / m
    return m, big_l, system.mass_d2(x) / m - big_l ** 2


def effective_potential(system, agg, x):
    """
    V_eff = V + (ħ²/2m) [ -g L' + (g + c) L² ]

    with g = (ᾱ+γ̄)/2 and c = ⟨αγ⟩ + η². For a Hermitian scheme this is
    V + (ħ²/2)[γ̄ (1/m)'' + ⟨αγ⟩ m'²/m³]; for η ≠ 0 it is the potential of
    m^η H_non m^-η, the operator the solvability functionals describe.
    """
    x = np.asarray(x, dtype=float)
    m, big_l, big_lp = _log_derivatives(system, x)
    g = (agg.abar + agg.gbar) / 2
    c = agg.agbar + agg.eta ** 2
    return system.potential(x) + system.hbar ** 2 / (2 * m) * (-g * big_lp + (g + c) * big_l ** 2)


def expanded_coefficients(system, agg, x):
    """
    (p, q) in ψ'' + p ψ' + q ψ + (2m/ħ²)(E - V) ψ = 0.

    p = -m'/m and q = ((ᾱ+γ̄)/2) m''/m - (⟨αγ⟩ + ᾱ + γ̄ + η²)(m'/m)².
    """
    x = np.asarray(x, dtype=float)
    m = system.mass(x)
    big_l = system.mass_d1(x) / m
    q = (agg.abar + agg.gbar) / 2 * system.mass_d2(x) / m
    q -= (agg.agbar + agg.abar + agg.gbar + agg.eta ** 2) * big_l ** 2
    return -big_l, q


# -- windows -------------------------------------------------------------------

def _mirror(lo, hi, lam):
    return (lo, hi) if lam > 0 else (-hi, -lo)


def _exp_lower_z(mu, lam):
    """
    z = e^{|λ|x} at which the closed ground state √(|λ|√μ) √z h₀(√μ(z-1))
    falls to _PSI_TAIL, or _Z_FLOOR when it is still larger there.
    """
    log_c = 0.5 * math.log(abs(lam) * math.sqrt(mu)) - 0.25 * math.log(math.pi) - math.log(_PSI_TAIL)

    def excess(u):
        return log_c + u / 2 - mu * (1 - math.exp(u)) ** 2 / 2

    floor = math.log(_Z_FLOOR)
    if excess(floor) >= 0 or excess(0.0) <= 0:
        return _Z_FLOOR
    return math.exp(optimize.brentq(excess, floor, 0.0, xtol=1e-12))


def default_window(system, levels=6):
    """
    Truncation interval holding the lowest `levels` states.

    Each exact-type system has a coordinate in which the low states look like
    harmonic-oscillator states; the window spans √(2k+1) + 6.5 harmonic
    lengths of it, clipped short of any singular point. The exponential
    system's open end sits where the ground state drops below 1e-12, or at
    e^{λx} = 1e-8 when the closed form decays too slowly to get there.
    """
    mu = system.omega0 / system.hbar
    reach = (math.sqrt(2 * levels + 1) + _WINDOW_MARGIN) / math.sqrt(mu)
    lam = system.lam
    sid = system.id

    if sid is SystemId.HARMONIC or (sid is SystemId.SEXTIC and lam == 0):
        return (-reach, reach)
    if sid is SystemId.EXP:
        z_lo = _exp_lower_z(mu, lam)
        z_hi = 1 + reach
        return _mirror(math.log(z_lo) / abs(lam), math.log(z_hi) / abs(lam), lam)
    if sid is SystemId.NONPOLY:
        a = abs(lam)
        y_lo, y_hi = -reach, min(reach, 0.9 / a)
        x_lo = max(y_lo / (1 - a * y_lo), -1 / a + 1e-6 / a)
        return _mirror(x_lo, y_hi / (1 - a * y_hi), lam)
    if sid is SystemId.SEXTIC:
        return (-10 / math.sqrt(lam), 10 / math.sqrt(lam))
    if sid is SystemId.LOG:
        x_hi = math.sinh(abs(lam) * reach) / abs(lam)
        return (-x_hi, x_hi)
    if sid is SystemId.POWER:
        x_hi = (reach / abs(system.params.get('a', 1.0))) ** (1 / (lam + 1))
        return (1e-6 * x_hi, x_hi)
    # rational: V grows only linearly away from the singular side
    far = max(20.0, reach ** 2) / abs(lam)
    return _mirror(-far, (1 - 1e-6) / abs(lam), lam)


def max_spacing(system, levels=6):
    """
    Largest h that keeps the three-point error of the top level near 2.5e-5
    relative, or None for systems without a harmonic coordinate.

    Level n is off by about (2n+1)(h/ℓ)²/25 relative, where ℓ is the
    shortest local harmonic length in x over its classical region.
    """
    mu = system.omega0 / system.hbar
    top = math.sqrt(2 * levels - 1)
    sid = system.id
    if sid is SystemId.HARMONIC or sid is SystemId.SEXTIC:
        ell = 1 / math.sqrt(mu)
    elif sid is SystemId.EXP:
        ell = 1 / (abs(system.lam) * (math.sqrt(mu) + top))
    elif sid is SystemId.NONPOLY:
        ell = 1 / (math.sqrt(mu) * (1 + abs(system.lam) * top / math.sqrt(mu)) ** 2)
    else:
        return None
    return ell * math.sqrt(25 * _FD_TARGET / (2 * levels - 1))


def _resolve_grid(system, grid_spec, levels):
    spec = grid_spec or GridSpec()
    lo, hi = spec.x_lo, spec.x_hi
    if lo is None or hi is None:
        d_lo, d_hi = default_window(system, levels)
        lo = d_lo if lo is None else float(lo)
        hi = d_hi if hi is None else float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValidationError(f"bad grid window [{lo}, {hi}]")
    dom_lo, dom_hi = system.domain
    if lo <= dom_lo or hi >= dom_hi:
        raise ValidationError(
            f"grid [{lo}, {hi}] touches the edge of the domain ({dom_lo}, {dom_hi})"
        )
    if spec.spacing is not None:
        if spec.spacing <= 0:
            raise ValidationError('grid spacing must be positive')
        points = max(int(round((hi - lo) / spec.spacing)) - 1, 3)
    elif spec.points is None:
        step = max_spacing(system, levels)
        points = DEFAULT_POINTS if step is None else max(DEFAULT_POINTS, math.ceil((hi - lo) / step))
    else:
        points = int(spec.points)
    if points < 3:
        raise ValidationError('grid needs at least 3 interior points')
    return lo, hi, points


# -- assembly and solve -------------------------------------------------------

def assemble(system, agg, grid_spec=None, levels=6):
    """
    Build the flux-form discretization of H on a uniform grid.

    Args:
        system: PdmSystem
        agg: OrderingAggregate (an OrderingScheme or preset name is also accepted)
        grid_spec: GridSpec; missing ends come from default_window(system, levels)
        levels: how many states the default window must hold

    Returns:
        DiscretizedOperator

    Raises:
        ValidationError: the grid touches a singular point or m is not positive on it
    """
    if not isinstance(agg, OrderingAggregate):
        agg = aggregate(scheme_from_config(agg))
    x_lo, x_hi, points = _resolve_grid(system, grid_spec, levels)
    h = (x_hi - x_lo) / (points + 1)
    grid = x_lo + h * np.arange(1, points + 1)
    mid = x_lo + h * (np.arange(points + 1) + 0.5)

    with np.errstate(all='ignore'):
        m_mid = system.mass(mid)
        veff = effective_potential(system, agg, grid)
    if not (np.all(np.isfinite(m_mid)) and np.all(m_mid > 0)):
        raise ValidationError('mass must be positive and finite on the grid')
    if not np.all(np.isfinite(veff)):
        raise ValidationError('effective potential is not finite on the grid')

    w_mid = 1.0 / m_mid
    c = system.hbar ** 2 / (2 * h ** 2)
    diag = c * (w_mid[:-1] + w_mid[1:]) + veff
    offdiag = -c * w_mid[1:-1]
    return DiscretizedOperator(
        grid=grid, h=h, diag=diag, offdiag=offdiag, veff=veff, w_mid=w_mid,
        x_lo=x_lo, x_hi=x_hi, system=system, agg=agg,
    )


def spectrum(op, k):
    """
    Lowest k eigenpairs by bisection and inverse iteration.

    Eigenvectors are scaled so Σ v_i² h = 1 and signed so the first entry
    above 1e-3 of the peak is positive.

    Returns:
        list of (E, eigenvector) with E ascending

    Raises:
        ValidationError: k outside 1..len(grid)
        EigenSolverError: LAPACK reported non-convergence
    """
    n = len(op.grid)
    if not 1 <= k <= n:
        raise ValidationError(f"cannot take {k} eigenpairs from a {n}-point grid")
    try:
        values, vectors = linalg.eigh_tridiagonal(
            op.diag, op.offdiag, select='i', select_range=(0, k - 1), lapack_driver='stebz',
            tol=_BISECTION_TOL,
        )
    except (linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"tridiagonal eigen-solve failed: {e}")

    pairs = []
    for i in range(k):
        v = vectors[:, i] / math.sqrt(op.h)
        peak = np.max(np.abs(v))
        first = np.flatnonzero(np.abs(v) > 1e-3 * peak)[0]
        if v[first] < 0:
            v = -v
        pairs.append((float(values[i]), v))
    return pairs


def _samples(op, psi):
    x = np.concatenate(([op.x_lo], op.grid, [op.x_hi]))
    values = np.asarray(psi(x), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValidationError('trial function is not finite on the grid')
    return x, values


def _scaled_max(lhs, e_psi):
    return float(np.max(np.abs(lhs - e_psi) / (1 + np.abs(e_psi))))


def residual(op, psi, E):
    """
    max_i |(Hψ)(x_i) - Eψ(x_i)| / (1 + |Eψ(x_i)|) over the interior nodes.

    `psi` is a callable of x; it is sampled at both Dirichlet ends too.
    """
    _, values = _samples(op, psi)
    return _scaled_max(op.apply(values), E * values[1:-1])


def residual_expanded(system, agg, psi, E, grid_spec=None):
    """
    Same scaled residual, evaluated on the expanded second-order form.

    ψ'' and ψ' are central differences; the result is multiplied back by
    -ħ²/2m so it is directly comparable with residual().
    """
    op = assemble(system, agg, grid_spec)
    _, values = _samples(op, psi)
    h = op.h
    d2 = (values[2:] - 2 * values[1:-1] + values[:-2]) / h ** 2
    d1 = (values[2:] - values[:-2]) / (2 * h)
    p, q = expanded_coefficients(system, op.agg, op.grid)
    centre = values[1:-1]
    m = system.mass(op.grid)
    lhs = -system.hbar ** 2 / (2 * m) * (d2 + p * d1 + q * centre) + system.potential(op.grid) * centre
    return _scaled_max(lhs, E * centre)


def nonhermitian_residual(system, agg, phi, E, grid_spec=None):
    """
    Scaled residual of the non-symmetrized ordered Hamiltonian on φ.

        H_non φ = -(ħ²/2)(u φ')' + ħ² η u' φ' + W φ,    u = 1/m

    where W = V_eff - (ħ²/2m)[η² L² + η(L' - L²)]. H_non = m^-η H m^η, so
    φ = m^-η ψ has the same eigenvalue as ψ.
    """
    if not isinstance(agg, OrderingAggregate):
        agg = aggregate(scheme_from_config(agg))
    op = assemble(system, agg, grid_spec)
    _, values = _samples(op, phi)
    x = op.grid
    m, big_l, big_lp = _log_derivatives(system, x)
    eta = agg.eta
    hbar2 = system.hbar ** 2
    w = op.veff + hbar2 / (2 * m) * (-(eta ** 2) * big_l ** 2 + eta * (-big_lp + big_l ** 2))
    u_prime = -system.mass_d1(x) / m ** 2

    flux = op.w_mid * np.diff(values)
    lhs = -op.kinetic_scale * np.diff(flux) + w * values[1:-1]
    if eta != 0:
        lhs = lhs + hbar2 * eta * u_prime * (values[2:] - values[:-2]) / (2 * op.h)
    return _scaled_max(lhs, E * values[1:-1])


def richardson(system, agg, k, grid_spec=None):
    """
    Eigenvalues on a grid and on its halved-spacing refinement.

    Returns:
        (coarse, fine, extrapolated) arrays; extrapolated = (4 fine - coarse)/3
    """
    spec = grid_spec or GridSpec()
    lo, hi, points = _resolve_grid(system, spec, k)
    spec = GridSpec(points, lo, hi, spec.spacing)
    coarse = np.array([e for e, _ in spectrum(assemble(system, agg, spec), k)])
    fine = np.array([e for e, _ in spectrum(assemble(system, agg, spec.refined()), k)])
    return coarse, fine, (4 * fine - coarse) / 3


def truncation_shift(op, k, values=None):
    """
    |ΔE| of the lowest k levels when the window grows at the same spacing.

    An end with open space beyond it moves out by a quarter of the window
    width; an end facing a singular point moves halfway towards it. Passing
    the already computed `values` of `op` saves one solve.
    """
    dom_lo, dom_hi = op.system.domain
    width = op.x_hi - op.x_lo
    reach_lo = width / 4 if math.isinf(dom_lo) else (op.x_lo - dom_lo) / 2
    reach_hi = width / 4 if math.isinf(dom_hi) else (dom_hi - op.x_hi) / 2
    n_lo = int(reach_lo / op.h)
    n_hi = int(reach_hi / op.h)
    wide = GridSpec(len(op.grid) + n_lo + n_hi, op.x_lo - n_lo * op.h, op.x_hi + n_hi * op.h)
    if values is None:
        values = [e for e, _ in spectrum(op, k)]
    widened = [e for e, _ in spectrum(assemble(op.system, op.agg, wide, levels=k), k)]
    return [abs(a - b) for a, b in zip(widened, values[:k])]


# -- driver --------------------------------------------------------------

def analytic_levels(system, agg, k):
    """(n + ½)ħω₀ for n < k when the system/ordering is exactly solvable, else None"""
    if system.id is SystemId.EXP and is_exact_exp(agg):
        return [analytic.energy(n, system) for n in range(k)]
    if system.id is SystemId.NONPOLY and is_exact_nonpoly(agg):
        return [analytic.energy(n, system) for n in range(k)]
    if system.id is SystemId.HARMONIC:
        return [(n + 0.5) * system.hbar * system.omega0 for n in range(k)]
    return None


class NumericSolver:
    """
    Builds spectrum reports for a system and an ordering.

    Example:
        solver = NumericSolver(GridSpec(points=4001), verbose=True)
        report = solver.solve(system, 'vonroos:a34', levels=6)
    """

    def __init__(self, grid_spec=None, verbose=False):
        self.grid_spec = grid_spec or GridSpec()
        self.verbose = verbose

    def log(self, message):
        """Print verbose log messages"""
        if self.verbose:
            print(f"[pdm-spectra] {message}", file=sys.stderr)

    def solve(self, system, ordering, levels=6):
        """
        Lowest `levels` eigenvalues with analytic comparison where one exists.

        Returns:
            dict: {system, lambda, omega0, hbar, ordering, grid, eigenvalues,
                   analytic, abs_err, leakage, truncation}

        `truncation` is the window error measured by truncation_shift();
        `leakage` is the closed forms' weight outside the physical region,
        the part of abs_err no grid or window can remove.
        """
        scheme = scheme_from_config(ordering)
        agg = aggregate(scheme)
        op = assemble(system, agg, self.grid_spec, levels=levels)
        self.log(f"{system.id.value}: {len(op.grid)} points on [{op.x_lo:.6g}, {op.x_hi:.6g}], h={op.h:.3e}")
        values = [e for e, _ in spectrum(op, levels)]
        self.log(f"lowest eigenvalue {values[0]:.12g}")
        truncation = truncation_shift(op, levels, values)
        self.log(f"largest truncation shift {max(truncation):.3e}")

        exact = analytic_levels(system, agg, levels)
        leakage = None
        if exact is not None and system.id in (SystemId.EXP, SystemId.NONPOLY):
            leakage = [analytic.boundary_leakage(n, system) for n in range(levels)]
        return {
            'system': system.id.value,
            'lambda': system.lam,
            'omega0': system.omega0,
            'hbar': system.hbar,
            'ordering': dict(scheme.to_dict(), aggregate=agg.to_dict()),
            'grid': op.to_dict(),
            'eigenvalues': values,
            'analytic': exact,
            'abs_err': None if exact is None else [abs(a - b) for a, b in zip(values, exact)],
            'leakage': leakage,
            'truncation': truncation,
        }
