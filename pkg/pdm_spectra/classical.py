"""
Classical quadratic Liénard oscillators  ẍ + f(x)ẋ² + g(x) = 0

Covers the two isochronous members of the catalog: their closed-form orbits,
adaptive integration with escape detection, period measurement and the
linearizing map X = h(x) that turns them into ẍ + ω₀²X = 0.
"""

import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate

from .catalog import SystemId, make_system, parse_system_id
from .utils import NonPeriodicOrbitError, SingularOrbitError, ValidationError

# Orbits whose |x| or |ẋ| pass this are treated as escaping
ESCAPE_BOUND = 1e8


@dataclass(frozen=True)
class LienardSystem:
    """f, g and g' in closed form, plus the catalog system they come from"""

    system_id: SystemId
    lam: float
    omega0: float
    f: object
    g: object
    gprime: object

    @property
    def pdm(self):
        """Catalog system with the same λ, ω₀ (None in the linear limit λ = 0)"""
        if self.lam == 0:
            return None
        return make_system(self.system_id, self.lam, self.omega0)

    def contains(self, x):
        """Physical region: all of ℝ, or the side of x = -1/λ containing 0"""
        x = np.asarray(x, dtype=float)
        if self.system_id is SystemId.NONPOLY and self.lam != 0:
            return 1 + self.lam * x > 0
        return np.isfinite(x)

    def sample_range(self):
        """Interval used for certificate and fit sampling"""
        if self.lam == 0:
            return (-1.0, 1.0)
        a = abs(self.lam)
        if self.system_id is SystemId.NONPOLY:
            lo, hi = -0.9 / a, 2.0 / a
            return (lo, hi) if self.lam > 0 else (-hi, -lo)
        return (-1.0 / a, 1.0 / a)

    def acceleration(self, x, v):
        return -self.f(x) * v * v - self.g(x)

    def isochronicity_defect(self, samples=100):
        """max |g'(x) + f(x)g(x) - ω₀²| over evenly spaced points of sample_range()"""
        x = np.linspace(*self.sample_range(), samples)
        return float(np.max(np.abs(self.gprime(x) + self.f(x) * self.g(x) - self.omega0 ** 2)))


def make_lienard(system_id, lam, omega0):
    """
    Build the Liénard data of an exactly solvable system.

    λ = 0 gives the linear oscillator f = 0, g = ω₀²x for either id.

    Raises:
        ValidationError: unknown id, a system without isochronous data, or ω₀ <= 0
    """
    sid = parse_system_id(system_id)
    if sid not in (SystemId.EXP, SystemId.NONPOLY):
        raise ValidationError(f"no Liénard data for the {sid.value} system")
    lam, omega0 = float(lam), float(omega0)
    if not (math.isfinite(omega0) and omega0 > 0):
        raise ValidationError(f"omega0 must be positive, got {omega0}")
    w2 = omega0 ** 2

    if lam == 0:
        return LienardSystem(
            sid, lam, omega0,
            f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            g=lambda x: w2 * np.asarray(x, dtype=float),
            gprime=lambda x: np.full_like(np.asarray(x, dtype=float), w2),
        )
    if sid is SystemId.EXP:
        return LienardSystem(
            sid, lam, omega0,
            f=lambda x: np.full_like(np.asarray(x, dtype=float), lam),
            g=lambda x: -(w2 / lam) * np.expm1(-lam * np.asarray(x, dtype=float)),
            gprime=lambda x: w2 * np.exp(-lam * np.asarray(x, dtype=float)),
        )
    return LienardSystem(
        sid, lam, omega0,
        f=lambda x: -2 * lam / (1 + lam * np.asarray(x, dtype=float)),
        g=lambda x: w2 * np.asarray(x, dtype=float) * (1 + lam * np.asarray(x, dtype=float)),
        gprime=lambda x: w2 * (1 + 2 * lam * np.asarray(x, dtype=float)),
    )


def hamiltonian(system, x, v):
    """
    H = ½ m(x) ẋ² + V(x), conserved along the Liénard flow.

    Args:
        system: LienardSystem or catalog PdmSystem
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    pdm = system.pdm if isinstance(system, LienardSystem) else system
    if pdm is None:
        return 0.5 * v ** 2 + 0.5 * system.omega0 ** 2 * x ** 2
    return 0.5 * pdm.mass(x) * v ** 2 + pdm.potential(x)


# -- closed forms -------------------------------------------------------------

def _check_amplitude(sid, A, lam):
    limit = math.inf if lam == 0 else 1 / abs(lam)
    if sid is SystemId.EXP:
        ok = 0 <= A <= limit
        bound = '<='
    else:
        ok = 0 <= A < limit
        bound = '<'
    if not ok:
        raise ValidationError(f"amplitude must satisfy 0 <= A {bound} 1/|lambda| for {sid.value}, got {A}")


def closed_form(system_id, A, delta, lam, omega0, t):
    """
    x(t) on the isochronous orbit of amplitude A and phase δ.

        exp:      x = ln(1 - λA sin(ω₀t+δ)) / λ
        nonpoly:  x = A sin(ω₀t+δ) / (1 - λA sin(ω₀t+δ))

    Raises:
        ValidationError: A outside [0, 1/|λ|] (exp) or [0, 1/|λ|) (nonpoly)
    """
    sid = parse_system_id(system_id)
    _check_amplitude(sid, A, lam)
    s = np.sin(omega0 * np.asarray(t, dtype=float) + delta)
    if sid is SystemId.EXP:
        if lam == 0:
            return -A * s
        with np.errstate(divide='ignore'):
            return np.log1p(-lam * A * s) / lam
    return A * s / (1 - lam * A * s)


def closed_form_velocity(system_id, A, delta, lam, omega0, t):
    """Time derivative of closed_form()"""
    sid = parse_system_id(system_id)
    _check_amplitude(sid, A, lam)
    phase = omega0 * np.asarray(t, dtype=float) + delta
    s, c = np.sin(phase), np.cos(phase)
    if sid is SystemId.EXP:
        return -A * omega0 * c / (1 - lam * A * s)
    return A * omega0 * c / (1 - lam * A * s) ** 2


def initial_conditions(system_id, A, delta, lam, omega0):
    """(x(0), ẋ(0)) taken from the closed form, so no phase fitting is needed"""
    x0 = float(closed_form(system_id, A, delta, lam, omega0, 0.0))
    v0 = float(closed_form_velocity(system_id, A, delta, lam, omega0, 0.0))
    return x0, v0


def harmonic_coordinate(system, x):
    """
    The linearizing map X = h(x) in closed form.

    exp: X = (e^{λx} - 1)/λ;  nonpoly: X = x/(1+λx). Along a closed-form orbit
    X is -A sin(ω₀t+δ) and A sin(ω₀t+δ) respectively.
    """
    x = np.asarray(x, dtype=float)
    if system.lam == 0:
        return x
    if system.system_id is SystemId.EXP:
        return np.expm1(system.lam * x) / system.lam
    return x / (1 + system.lam * x)


# -- integration -----------------------------------------------------------------

@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    sol: object = None

    def energy(self, system):
        return hamiltonian(system, self.x, self.v)

    def rows(self, system):
        """(t, x, ẋ, H) rows for the trajectory table"""
        h = self.energy(system)
        return zip(self.t, self.x, self.v, h)


class OrbitIntegrator:
    """
    Integrates ẍ = -f ẋ² - g as a first-order system.

    Methods 'DOP853' and 'RK45' go through scipy's adaptive pairs with dense
    output; 'rk4' is a fixed-step classical Runge-Kutta at the sampling step,
    reproducible to the bit across scipy versions.
    """

    METHODS = ('DOP853', 'RK45', 'rk4')

    def __init__(self, method='DOP853', rtol=1e-11, atol=1e-12, verbose=False):
        if method not in self.METHODS:
            raise ValidationError(f"unknown integration method {method!r} (expected one of {self.METHODS})")
        self.method = method
        self.rtol = rtol
        self.atol = atol
        self.verbose = verbose

    def log(self, message):
        """Print verbose log messages"""
        if self.verbose:
            print(f"[pdm-spectra] {message}", file=sys.stderr)

    def integrate(self, system, x0, v0, t_end, dt):
        """
        Integrate from (x0, v0) over [0, t_end], sampled every dt.

        Returns:
            Trajectory

        Raises:
            ValidationError: x0 outside the physical region or dt <= 0
            SingularOrbitError: the orbit reached x = -1/λ or ran off to infinity
        """
        if dt <= 0 or t_end <= 0:
            raise ValidationError('t_end and dt must be positive')
        if not bool(system.contains(x0)):
            raise ValidationError(f"x0 = {x0} is outside the physical region")
        count = int(math.floor(t_end / dt + 1e-9))
        t_eval = np.minimum(dt * np.arange(count + 1), t_end)
        self.log(f"{self.method}: x0={x0:.6g} v0={v0:.6g} over [0, {t_end:.6g}]")
        if self.method == 'rk4':
            return self._rk4(system, x0, v0, t_eval, dt)
        return self._adaptive(system, x0, v0, t_end, t_eval)

    def _adaptive(self, system, x0, v0, t_end, t_eval):
        def rhs(t, y):
            return [y[1], system.acceleration(y[0], y[1])]

        def escaped(t, y):
            return ESCAPE_BOUND - max(abs(y[0]), abs(y[1]))
        escaped.terminal = True

        events = [escaped]
        if system.system_id is SystemId.NONPOLY and system.lam != 0:
            def singular(t, y):
                return 1 + system.lam * y[0]
            singular.terminal = True
            events.append(singular)

        result = integrate.solve_ivp(
            rhs, (0.0, t_end), [x0, v0], method=self.method, t_eval=t_eval,
            dense_output=True, events=events, rtol=self.rtol, atol=self.atol,
        )
        if result.status == 1:
            t_hit = min(float(ev[0]) for ev in result.t_events if len(ev))
            self.log(f"orbit escaped at t={t_hit:.6g}")
            raise SingularOrbitError(f"orbit escaped at t = {t_hit:.6g}", escape_time=t_hit)
        if result.status == -1:
            t_hit = float(result.t[-1]) if len(result.t) else 0.0
            raise SingularOrbitError(f"integration broke down near t = {t_hit:.6g}: {result.message}",
                                     escape_time=t_hit)
        return Trajectory(t=result.t, x=result.y[0], v=result.y[1], sol=result.sol)

    def _rk4(self, system, x0, v0, t_eval, dt):
        def rhs(y):
            return np.array([y[1], system.acceleration(y[0], y[1])])

        ys = np.empty((len(t_eval), 2))
        y = np.array([x0, v0], dtype=float)
        ys[0] = y
        for i in range(1, len(t_eval)):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * dt * k1)
            k3 = rhs(y + 0.5 * dt * k2)
            k4 = rhs(y + dt * k3)
            y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not (np.all(np.isfinite(y)) and np.max(np.abs(y)) < ESCAPE_BOUND and system.contains(y[0])):
                raise SingularOrbitError(f"orbit escaped at t = {t_eval[i]:.6g}", escape_time=float(t_eval[i]))
            ys[i] = y
        x, v = ys[:, 0], ys[:, 1]
        spline = interpolate.CubicHermiteSpline(t_eval, np.stack([x, v], axis=-1),
                                                np.stack([v, system.acceleration(x, v)], axis=-1))

        def sol(t):
            return spline(t).T

        return Trajectory(t=t_eval, x=x, v=v, sol=sol)


def period(system, amplitude, delta=0.0, cycles=2.5, steps_per_period=2000, integrator=None):
    """
    Measure the oscillation period of the orbit with the given amplitude.

    Starts on the closed-form orbit, integrates `cycles` nominal periods and
    returns the mean spacing of successive ẋ crossings from + to -. Each
    crossing is bracketed on the sample grid and refined on a cubic Hermite
    interpolant of (ẋ, ẍ).

    Raises:
        ValidationError: amplitude outside the periodic range
        NonPeriodicOrbitError: fewer than two crossings were found
        SingularOrbitError: the orbit escaped
    """
    integrator = integrator or OrbitIntegrator()
    x0, v0 = initial_conditions(system.system_id, amplitude, delta, system.lam, system.omega0)
    nominal = 2 * math.pi / system.omega0
    dt = nominal / steps_per_period
    traj = integrator.integrate(system, x0, v0, cycles * nominal, dt)
    crossings = turning_times(system, traj)
    if len(crossings) < 2:
        raise NonPeriodicOrbitError(
            f"found {len(crossings)} velocity crossing(s) in {cycles} nominal periods"
        )
    return float(np.mean(np.diff(crossings)))


def turning_times(system, traj):
    """Times where ẋ passes from positive to non-positive"""
    t, v = traj.t, traj.v
    acc = system.acceleration(traj.x, v)
    times = []
    for i in np.flatnonzero((v[:-1] > 0) & (v[1:] <= 0)):
        piece = interpolate.CubicHermiteSpline(t[i:i + 2], v[i:i + 2], acc[i:i + 2])
        roots = [r for r in piece.roots(extrapolate=False) if t[i] <= r <= t[i + 1]]
        times.append(float(roots[0]) if roots else float(t[i + 1]))
    return times


# -- linearizing transformation ----------------------------------------------------

@dataclass(frozen=True)
class Linearization:
    """X = h(x) together with the fitted g-template coefficients"""

    h: object
    g1: float
    g2: float
    consistency: float
    x_ref: float


def linearize(f, g, x_range, h1=1.0, h2=0.0, g1=None, g2=None, samples=200):
    """
    Test whether g fits the template that makes X = h(x) linearizing.

    With F = ∫f dx and I = ∫e^F dx (both taken from a reference point inside
    x_range, 0 when possible) the map is h = h1·I + h2 and the template is
    g = g1 e^{-F} I + g2 e^{-F}. F and I come from one ODE solve.

    Args:
        f, g: vectorized callables
        x_range: (a, b) sampling interval inside the region where f is integrable
        g1, g2: fixed template coefficients; fitted by least squares when None

    Returns:
        Linearization with consistency = max |g - template| over the samples
    """
    a, b = (float(v) for v in x_range)
    if not a < b:
        raise ValidationError('x_range must be increasing')
    x_ref = 0.0 if a <= 0.0 <= b else a

    def rhs(x, y):
        return [float(f(x)), math.exp(y[0])]

    branches = []
    for end in (a, b):
        if end != x_ref:
            res = integrate.solve_ivp(rhs, (x_ref, end), [0.0, 0.0], method='DOP853',
                                      dense_output=True, rtol=1e-12, atol=1e-14)
            if not res.success:
                raise ValidationError(f"could not integrate f over [{x_ref}, {end}]: {res.message}")
            branches.append((min(x_ref, end), max(x_ref, end), res.sol))

    def big_f_and_i(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((2, len(x)))
        for lo, hi, sol in branches:
            sel = (x >= lo) & (x <= hi) & (x != x_ref)
            if np.any(sel):
                out[:, sel] = sol(x[sel])
        return out

    xs = np.linspace(a, b, samples)
    big_f, big_i = big_f_and_i(xs)
    basis = np.column_stack([np.exp(-big_f) * big_i, np.exp(-big_f)])
    target = np.asarray(g(xs), dtype=float)
    if g1 is None or g2 is None:
        (g1, g2), *_ = np.linalg.lstsq(basis, target, rcond=None)
    consistency = float(np.max(np.abs(basis @ np.array([g1, g2]) - target)))

    def h(x):
        values = h1 * big_f_and_i(x)[1] + h2
        return values if np.ndim(x) else float(values[0])

    return Linearization(h=h, g1=float(g1), g2=float(g2), consistency=consistency, x_ref=x_ref)
