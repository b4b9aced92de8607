"""
Command-line interface for pdm-spectra
"""

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __description__, __version__
from . import analytic, bethe, classical
from .catalog import EXACT_SYSTEMS, SystemId, parse_system_id, system_from_config
from .numeric import GridSpec, NumericSolver
from .ordering import (
    aggregate,
    constraint_A,
    constraint_B_nonpoly,
    constraints_appB,
    is_exact_exp,
    is_exact_nonpoly,
    scheme_from_config,
)
from .utils import (
    EXIT_CONFIG,
    EXIT_INTERRUPTED,
    EXIT_OK,
    EXIT_UNEXPECTED,
    ConfigError,
    PdmError,
    ValidationError,
    error_kind,
    exit_code_for,
    harden_stdio,
    parse_range,
    resolve_seed,
    style,
    symbols,
    write_csv,
    write_json,
)

COMMANDS = ('spectrum', 'wavefunction', 'classical', 'period-scan', 'constraint-check', 'bethe')

# Ordering used when none is given: the exact one for the system at hand
DEFAULT_ORDERINGS = {
    SystemId.EXP: 'vonroos:a34',
    SystemId.NONPOLY: 'vonroos:b2',
}
FALLBACK_ORDERING = 'bendaniel-duke'


def _default_system():
    return {'system': 'exp', 'lambda': 1.0, 'omega0': 1.0, 'hbar': 1.0}


@dataclass
class RunConfig:
    """
    Everything one command needs. Mirrors the --config JSON schema.

    `n` is a list of quantum numbers (wavefunction) or polynomial degrees
    (bethe); `amplitudes` feeds period-scan.
    """

    command: str
    system: dict = field(default_factory=_default_system)
    ordering: object = None
    grid: dict = field(default_factory=dict)
    levels: int = 6
    n: list = field(default_factory=lambda: [0])
    amplitudes: list = None
    amplitude: float = 0.5
    delta: float = 0.0
    periods: float = 5.0
    steps: int = 2000
    method: str = 'DOP853'
    d: float = None
    branch: str = 'auto'
    points: int = 2001
    output: str = None
    jobs: int = 1
    seed: int = None

    @classmethod
    def from_dict(cls, data):
        """
        Raises:
            ConfigError: unknown keys, a missing command or a value of the wrong type
        """
        if not isinstance(data, dict):
            raise ConfigError('config must be a JSON object')
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if 'command' not in data:
            raise ConfigError("config needs a 'command'")
        config = cls(**data)
        for name in ('system', 'grid'):
            if not isinstance(getattr(config, name), dict):
                raise ConfigError(f"{name} must be an object")
        try:
            for name in ('amplitude', 'delta', 'periods'):
                setattr(config, name, float(getattr(config, name)))
            if config.d is not None:
                config.d = float(config.d)
            if isinstance(config.amplitudes, str):
                config.amplitudes = parse_range(config.amplitudes)
            elif config.amplitudes is not None:
                config.amplitudes = [float(a) for a in config.amplitudes]
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad config value: {e}")
        return config

    def validate(self):
        """Check every precondition that can be checked before computing"""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r} (expected one of: {', '.join(COMMANDS)})")
        if not isinstance(self.system, dict):
            raise ConfigError('system must be an object')
        if isinstance(self.n, int):
            self.n = [self.n]
        try:
            self.levels = int(self.levels)
            self.jobs = int(self.jobs)
            self.steps = int(self.steps)
            self.points = int(self.points)
            self.n = [int(v) for v in self.n]
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad integer option: {e}")
        if self.levels < 1:
            raise ValidationError('levels must be >= 1')
        if self.jobs < 1:
            raise ConfigError('jobs must be >= 1')
        if any(v < 0 for v in self.n):
            raise ValidationError('quantum numbers and degrees must be >= 0')
        if self.points < 10 or self.steps < 10:
            raise ValidationError('points and steps must be >= 10')
        if self.command == 'period-scan' and not self.amplitudes:
            raise ConfigError('period-scan needs amplitudes')
        return self

    def to_dict(self):
        return asdict(self)


# -- shared helpers ------------------------------------------------------------

def _build_system(config):
    return system_from_config(dict(config.system))


def _ordering_for(config, system):
    if config.ordering is not None:
        return scheme_from_config(config.ordering)
    return scheme_from_config(DEFAULT_ORDERINGS.get(system.id, FALLBACK_ORDERING))


def _grid_spec(config):
    def optional(key, kind):
        value = grid.get(key)
        return None if value is None else kind(value)

    try:
        grid = dict(config.grid or {})
        return GridSpec(
            points=optional('points', int),
            x_lo=optional('x_lo', float),
            x_hi=optional('x_hi', float),
            spacing=optional('spacing', float),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad grid option: {e}")


def _map(config, func, items):
    """Apply func over items, in order, on a thread pool when --jobs > 1"""
    if config.jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        return list(pool.map(func, items))


def _per_level_path(output, n, count):
    if output in (None, '-') or count == 1:
        return output
    path = Path(output)
    return str(path.with_name(f'{path.stem}_n{n}{path.suffix}'))


class Runner:
    """Executes one RunConfig, writing its artifact to the configured output"""

    def __init__(self, config, verbose=False, quiet=False):
        self.config = config
        self.verbose = verbose
        self.quiet = quiet
        self.sym = symbols(sys.stderr)

    def log(self, message):
        """Print verbose log messages"""
        if self.verbose:
            print(f"[pdm-spectra] {message}", file=sys.stderr)

    def say(self, message):
        """Human summary on stderr unless quiet"""
        if not self.quiet:
            print(f"[pdm-spectra] {self.sym['ok']} {message}", file=sys.stderr)

    def execute(self):
        handler = {
            'spectrum': self.spectrum,
            'wavefunction': self.wavefunction,
            'classical': self.classical,
            'period-scan': self.period_scan,
            'constraint-check': self.constraint_check,
            'bethe': self.bethe,
        }[self.config.command]
        return handler()

    # -- commands ----------------------------------------------------------

    def spectrum(self):
        config = self.config
        system = _build_system(config)
        scheme = _ordering_for(config, system)
        solver = NumericSolver(_grid_spec(config), verbose=self.verbose)
        report = solver.solve(system, scheme, levels=config.levels)
        write_json(report, config.output)
        if report['abs_err']:
            worst = max(report['abs_err'])
            self.say(f"{config.levels} eigenvalues, max |ΔE| = {style(f'{worst:.3e}', 'bold', stream=sys.stderr)}")
        else:
            self.say(f"{config.levels} eigenvalues (no closed form for this system/ordering)")
        return EXIT_OK

    def wavefunction(self):
        config = self.config
        system = _build_system(config)
        if system.id not in EXACT_SYSTEMS:
            raise ValidationError(f"the {system.id.value} system has no closed-form eigenfunctions")
        scheme = _ordering_for(config, system)
        agg = aggregate(scheme)
        analytic.check_exact(system, agg)

        def table(n):
            solution = analytic.exact_solution(n, system, agg)
            mapped = analytic.quasi_hermitian_map(solution, system, agg)
            x, converged = analytic.table_grid(mapped, system, points=config.points)
            if not converged:
                self.log(f"n={n}: tail still above tolerance at the emitted range ends")
            values = np.asarray(mapped.psi(x), dtype=float)
            header = {
                'system': system.id.value,
                'lambda': system.lam,
                'omega0': system.omega0,
                'hbar': system.hbar,
                'n': n,
                'energy': mapped.energy,
                'norm_const': mapped.norm_const,
                'measure': mapped.measure.value,
                'eta': mapped.eta,
                'leakage': solution.meta['leakage'],
                'config': config.to_dict(),
            }
            return n, header, list(zip(x, values, values ** 2))

        tables = _map(config, table, config.n)
        for n, header, rows in tables:
            path = _per_level_path(config.output, n, len(tables))
            write_csv(header, ['x', f'psi_{n}', f'|psi_{n}|^2'], rows, path)
        self.say(f"wrote {len(tables)} wavefunction table(s)")
        return EXIT_OK

    def _lienard(self):
        spec = self.config.system
        sid = parse_system_id(spec.get('system', 'exp'))
        return classical.make_lienard(sid, spec.get('lambda', 1.0), spec.get('omega0', 1.0))

    def classical(self):
        config = self.config
        lsys = self._lienard()
        integrator = classical.OrbitIntegrator(method=config.method, verbose=self.verbose)
        x0, v0 = classical.initial_conditions(lsys.system_id, config.amplitude, config.delta,
                                              lsys.lam, lsys.omega0)
        nominal = 2 * math.pi / lsys.omega0
        traj = integrator.integrate(lsys, x0, v0, config.periods * nominal, nominal / config.steps)
        header = dict(lsys.pdm.to_dict() if lsys.pdm else {'system': lsys.system_id.value},
                      amplitude=config.amplitude, delta=config.delta, config=config.to_dict())
        write_csv(header, ['t', 'x', 'xdot', 'H'], traj.rows(lsys), config.output)
        energy = traj.energy(lsys)
        drift = float(np.max(np.abs(energy - energy[0])) / max(abs(energy[0]), 1e-300))
        self.say(f"{len(traj.t)} samples, relative energy drift {drift:.2e}")
        return EXIT_OK

    def period_scan(self):
        config = self.config
        lsys = self._lienard()
        limit = math.inf if lsys.lam == 0 else 1 / abs(lsys.lam)
        for amp in config.amplitudes:
            if not 0 < amp < limit:
                raise ValidationError(f"amplitude {amp} is outside the periodic range (0, {limit})")
        integrator = classical.OrbitIntegrator(method=config.method, verbose=self.verbose)
        nominal = 2 * math.pi / lsys.omega0

        def measure(amp):
            return classical.period(lsys, amp, delta=config.delta,
                                    steps_per_period=config.steps, integrator=integrator)

        periods = _map(config, measure, list(config.amplitudes))
        rows = [(a, t, abs(t - nominal)) for a, t in zip(config.amplitudes, periods)]
        header = dict(system=lsys.system_id.value, lam=lsys.lam, omega0=lsys.omega0,
                      nominal_period=nominal, config=config.to_dict())
        write_csv(header, ['amplitude', 'period', 'abs_err'], rows, config.output)
        self.say(f"{len(rows)} amplitudes, max |T - 2π/ω₀| = {max(r[2] for r in rows):.2e}")
        return EXIT_OK

    def constraint_check(self):
        config = self.config
        scheme = scheme_from_config(config.ordering if config.ordering is not None else FALLBACK_ORDERING)
        agg = aggregate(scheme)
        appb_a, appb_b = constraints_appB(agg)
        report = {
            'ordering': scheme.to_dict(),
            'aggregate': agg.to_dict(),
            'hermitian': agg.is_hermitian,
            'A': constraint_A(agg),
            'B': constraint_B_nonpoly(agg),
            'appB': {'A': appb_a, 'B': appb_b},
        }
        name = (config.system or {}).get('system')
        if name is not None:
            sid = parse_system_id(name)
            report['system'] = sid.value
            if sid is SystemId.EXP:
                report['exact'] = is_exact_exp(agg)
            elif sid is SystemId.NONPOLY:
                report['exact'] = is_exact_nonpoly(agg)
            elif sid is SystemId.SEXTIC:
                try:
                    report['d'] = bethe.appb_exponents(appb_a)
                    report['exact'] = True
                except PdmError:
                    report['exact'] = False
            else:
                report['exact'] = False
        write_json(report, config.output)
        verdict = report.get('exact')
        if verdict is None:
            self.say(f"A = {report['A']!r}, B = {report['B']!r}")
        else:
            word = style('exact', 'green', stream=sys.stderr) if verdict else style('not exact', 'orange',
                                                                                    stream=sys.stderr)
            self.say(f"{scheme.name}: {word} for {report['system']}")
        return EXIT_OK

    def bethe(self):
        config = self.config
        system = _build_system(config)
        scheme = _ordering_for(config, system)
        agg = aggregate(scheme)
        solver = bethe.BetheSolver(seed=resolve_seed(config.seed), verbose=self.verbose)

        if system.id is SystemId.SEXTIC:
            def problem_for(n):
                _, problem = bethe.reduce_appB(system, agg, degree=n, branch=config.branch)
                return problem
        elif system.id in EXACT_SYSTEMS:
            d = config.d if config.d is not None else bethe.heun_exponent(system.id, agg)[0]

            def problem_for(n):
                return bethe.heun_reductions(system, d, degree=n, agg=agg)
        else:
            raise ValidationError(f"no polynomial reduction for the {system.id.value} system")

        def solve(n):
            problem = problem_for(n)
            solution = solver.solve(problem)
            report = solution.to_dict()
            if not solution.is_real:
                self.log(f"n={n}: complex roots")
            if system.id is SystemId.SEXTIC:
                d, kappa = problem.meta['d'], problem.meta['kappa']
                report['energy_formula'] = bethe.energy_appB(n, d, system.omega0, system.hbar)
                report['required_B'] = bethe.required_B(n, d, kappa, solution.roots)
                try:
                    report['norm'] = bethe.appb_norm(system, d, solution.roots)
                    report['normalizable'] = True
                except PdmError:
                    report['normalizable'] = False
            return report

        reports = _map(config, solve, config.n)
        write_json({
            'system': system.to_dict(),
            'ordering': scheme.to_dict(),
            'seed': solver.seed,
            'solutions': reports,
        }, config.output)
        self.say(f"{len(reports)} polynomial solution(s)")
        return EXIT_OK


def run(config, verbose=False, quiet=False):
    """
    Validate and execute a RunConfig.

    Returns:
        exit code; on failure a JSON error object is printed on stdout
    """
    try:
        config.validate()
        return Runner(config, verbose=verbose, quiet=quiet).execute()
    except PdmError as e:
        return report_failure(e, symbols(sys.stderr))


def report_failure(error, sym):
    """Print the JSON error object on stdout and a one-line note on stderr"""
    code = exit_code_for(error)
    print(json.dumps({'error': error_kind(error), 'message': str(error), 'exit_code': code}))
    print(f"[pdm-spectra] {sym['fail']} {error}", file=sys.stderr)
    return code


# -- argument parsing ------------------------------------------------------------

class ArgumentParser(argparse.ArgumentParser):
    """argparse whose usage errors surface as ConfigError instead of exiting"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _common_options():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--config', metavar='FILE', help='JSON run config (flags override its values)')
    parent.add_argument('--system', help='exp, nonpoly, sextic, log, rational, power, harmonic')
    parent.add_argument('--lambda', dest='lam', type=float, metavar='LAMBDA', help='nonlinearity parameter')
    parent.add_argument('--omega0', type=float, help='angular frequency')
    parent.add_argument('--hbar', type=float, help='reduced Planck constant (default 1)')
    parent.add_argument('--a', dest='amp_a', type=float, metavar='A', help='power-law amplitude')
    parent.add_argument('--ordering', help='preset name, e.g. vonroos:a34, gora-williams')
    parent.add_argument('-o', '--output', metavar='PATH', help='output file (default: stdout)')
    parent.add_argument('--jobs', type=int, help='worker threads for sweeps (default 1)')
    parent.add_argument('--seed', type=int, help='solver seed (PDM_SPECTRA_SEED wins)')
    verbosity = parent.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Enable verbose/debug output')
    verbosity.add_argument('--quiet', action='store_true', help='Suppress the human-readable summary')
    return parent


def create_parser():
    """Create command-line argument parser"""
    parser = ArgumentParser(
        prog='pdm-spectra',
        description=__description__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  Lowest six levels of the exponential system:
    pdm-spectra spectrum --system exp --lambda 1 --omega0 2 --ordering vonroos:a34 --levels 6

  Is an ordering exactly solvable for a system?
    pdm-spectra constraint-check --ordering gora-williams --system exp

  Period against amplitude:
    pdm-spectra period-scan --system nonpoly --lambda 1 --omega0 2 --amplitudes 0.1:0.9:9

  Wavefunction tables, one file per level:
    pdm-spectra wavefunction --system nonpoly --lambda 1 --omega0 7 --n 0,1,2 -o psi.csv

  Quasi-exact levels of the sextic system:
    pdm-spectra bethe --system sextic --lambda 1 --omega0 1 --ordering bendaniel-duke --n 0,1,2

  Everything from a file:
    pdm-spectra spectrum --config run.json

Exit codes:
  0 success   1 unexpected error   2 bad config or flags
  3 precondition violated   4 solver failure   130 interrupted
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    common = _common_options()

    p = sub.add_parser('spectrum', parents=[common], help='finite-difference eigenvalues (JSON)')
    p.add_argument('--levels', type=int, help='number of eigenvalues (default 6)')
    p.add_argument('--points', dest='grid_points', type=int, help='interior grid points (default: at least 4001)')
    p.add_argument('--x-lo', type=float, help='left end of the grid')
    p.add_argument('--x-hi', type=float, help='right end of the grid')

    p = sub.add_parser('wavefunction', parents=[common], help='closed-form eigenfunction tables (CSV)')
    p.add_argument('--n', help='quantum numbers, e.g. 0,1,2 or 0:5:6')
    p.add_argument('--points', type=int, help='rows per table (default 2001)')

    p = sub.add_parser('classical', parents=[common], help='integrated Liénard trajectory (CSV)')
    p.add_argument('--amplitude', type=float, help='orbit amplitude A (default 0.5)')
    p.add_argument('--delta', type=float, help='orbit phase (default 0)')
    p.add_argument('--periods', type=float, help='nominal periods to integrate (default 5)')
    p.add_argument('--steps', type=int, help='samples per nominal period (default 2000)')
    p.add_argument('--method', choices=classical.OrbitIntegrator.METHODS, help='integrator (default DOP853)')

    p = sub.add_parser('period-scan', parents=[common], help='measured period against amplitude (CSV)')
    p.add_argument('--amplitudes', help='start:stop:count or a comma list')
    p.add_argument('--steps', type=int, help='samples per nominal period (default 2000)')
    p.add_argument('--method', choices=classical.OrbitIntegrator.METHODS, help='integrator (default DOP853)')

    sub.add_parser('constraint-check', parents=[common], help='solvability functionals of an ordering (JSON)')

    p = sub.add_parser('bethe', parents=[common], help='Bethe-ansatz polynomial solutions (JSON)')
    p.add_argument('--n', help='polynomial degrees, e.g. 0,1,2')
    p.add_argument('--d', type=float, help='Heun exponent d (exp/nonpoly; default from the ordering)')
    p.add_argument('--branch', choices=('auto', 'upper', 'lower'), help='root of 4d²-10d+A=0 (sextic)')

    return parser


def _int_list(text):
    return [int(round(v)) for v in parse_range(text)]


def load_config(path):
    """Read a --config file"""
    try:
        with open(path, encoding='utf-8') as f:
            return json.load(f)
    except (OSError, UnicodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"Could not read config {path}: {e}")


def config_from_args(args):
    """Merge --config with explicit flags (flags win)"""
    data = load_config(args.config) if args.config else {}
    data['command'] = args.command
    config = RunConfig.from_dict(data)

    system = dict(config.system)
    for key, value in (('system', args.system), ('lambda', args.lam), ('omega0', args.omega0),
                       ('hbar', args.hbar), ('a', args.amp_a)):
        if value is not None:
            system[key] = value
    if args.command == 'constraint-check' and 'system' not in data and args.system is None:
        system = {}
    config.system = system

    grid = dict(config.grid or {})
    for key, attr in (('points', 'grid_points'), ('x_lo', 'x_lo'), ('x_hi', 'x_hi')):
        value = getattr(args, attr, None)
        if value is not None:
            grid[key] = value
    config.grid = grid

    simple = ('ordering', 'output', 'jobs', 'seed', 'levels', 'amplitude', 'delta', 'periods',
              'steps', 'method', 'd', 'branch')
    for name in simple:
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    if args.command == 'wavefunction' and getattr(args, 'points', None) is not None:
        config.points = args.points
    if getattr(args, 'n', None) is not None:
        config.n = _int_list(args.n)
    if getattr(args, 'amplitudes', None) is not None:
        config.amplitudes = parse_range(args.amplitudes)
    return config


def main(argv=None):
    """Main CLI entry point"""
    harden_stdio()
    parser = create_parser()
    sym = symbols(sys.stderr)
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise ConfigError('choose a command')
        config = config_from_args(args)
    except PdmError as e:
        return report_failure(e, sym)

    try:
        return run(config, verbose=args.verbose, quiet=args.quiet)

    except KeyboardInterrupt:
        print(f"\n[pdm-spectra] {sym['warn']} Cancelled by user", file=sys.stderr)
        return EXIT_INTERRUPTED

    except Exception as e:
        print(json.dumps({'error': 'unexpected', 'message': str(e), 'exit_code': EXIT_UNEXPECTED}))
        print(f"\n[pdm-spectra] {sym['fail']} Unexpected error: {e}", file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_UNEXPECTED


if __name__ == '__main__':
    sys.exit(main())
