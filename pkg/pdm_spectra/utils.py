"""
Utility functions: error types, exit codes, console styling, artifact writers
"""

import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np


# Custom Exceptions
class PdmError(Exception):
    """Base exception for every failure raised by pdm-spectra"""
    pass


class ConfigError(PdmError):
    """Raised when a run config or a command-line value cannot be parsed"""
    pass


class ValidationError(PdmError):
    """Raised when a parameter violates a documented precondition"""
    pass


class ReductionUnavailableError(ValidationError):
    """Raised when an ordering admits no real reduction exponent d"""
    pass


class SolverError(PdmError):
    """Base class for numerical failures"""
    pass


class QuadratureError(SolverError):
    """Raised when adaptive quadrature misses its tolerance"""

    def __init__(self, message, abserr=None):
        super().__init__(message)
        self.abserr = abserr


class EigenSolverError(SolverError):
    """Raised when the tridiagonal eigen-solve does not converge"""
    pass


class BetheConvergenceError(SolverError):
    """Raised when no Newton seed reaches a Bethe-ansatz solution"""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class SingularOrbitError(SolverError):
    """Raised when a classical orbit leaves the physical region"""

    def __init__(self, message, escape_time=None):
        super().__init__(message)
        self.escape_time = escape_time


class NonPeriodicOrbitError(SolverError):
    """Raised when no second same-direction turning point is found"""
    pass


# Exit codes (used by the CLI so callers can react to failure kinds)
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_INTERRUPTED = 130


def exit_code_for(error):
    """Map an exception onto the CLI exit code contract"""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, ValidationError):
        return EXIT_VALIDATION
    if isinstance(error, SolverError):
        return EXIT_SOLVER
    return EXIT_UNEXPECTED


def error_kind(error):
    """Short machine-readable name for an error, e.g. 'quadrature'"""
    kinds = {
        ConfigError: 'config',
        ReductionUnavailableError: 'reduction_unavailable',
        ValidationError: 'validation',
        QuadratureError: 'quadrature',
        EigenSolverError: 'eigensolver',
        BetheConvergenceError: 'bethe_convergence',
        SingularOrbitError: 'singular_orbit',
        NonPeriodicOrbitError: 'non_periodic_orbit',
        SolverError: 'solver',
    }
    for cls in type(error).__mro__:
        if cls in kinds:
            return kinds[cls]
    return 'unexpected'


# Console output: legacy Windows consoles are cp1252 and cannot encode the
# check marks, so fall back to ASCII equivalents.
def supports_unicode(stream=None):
    """Check whether the stream can encode the symbols we want to print"""
    stream = stream or sys.stdout
    encoding = getattr(stream, 'encoding', None)
    if not encoding:
        return False
    try:
        '✓✗⚠ħω'.encode(encoding)
        return True
    except (UnicodeEncodeError, LookupError):
        return False


_UNICODE_SYMBOLS = {'ok': '✓', 'fail': '✗', 'warn': '⚠', 'hbar': 'ħ', 'omega': 'ω'}
_ASCII_SYMBOLS = {'ok': '+', 'fail': 'x', 'warn': '!', 'hbar': 'hbar', 'omega': 'w'}


def symbols(stream=None):
    """Return the symbol table appropriate for the given output stream"""
    return _UNICODE_SYMBOLS if supports_unicode(stream) else _ASCII_SYMBOLS


def supports_color(stream=None):
    """Return whether ANSI styling is appropriate for this terminal."""
    stream = stream or sys.stdout
    if os.environ.get('NO_COLOR') is not None:
        return False
    if not hasattr(stream, 'isatty') or not stream.isatty():
        return False
    return os.environ.get('TERM') != 'dumb'


_ANSI = {
    'reset': '\033[0m',
    'bold': '\033[1m',
    'dim': '\033[2m',
    'green': '\033[38;5;77m',
    'orange': '\033[38;5;215m',
    'red': '\033[38;5;203m',
}


def style(text, *names, stream=None):
    """Apply ANSI styles only when the destination supports them."""
    if not supports_color(stream):
        return str(text)
    prefix = ''.join(_ANSI[name] for name in names)
    return f"{prefix}{text}{_ANSI['reset']}"


def harden_stdio():
    """Make stdout/stderr replace, rather than raise on, non-encodable characters"""
    for stream in (sys.stdout, sys.stderr):
        reconfigure = getattr(stream, 'reconfigure', None)
        if reconfigure:
            try:
                reconfigure(errors='replace')
            except (ValueError, OSError):
                pass


# Seeds
SEED_ENV_VAR = 'PDM_SPECTRA_SEED'
DEFAULT_SEED = 12345


def resolve_seed(seed=None):
    """
    Pick the seed for multi-start solvers.

    The PDM_SPECTRA_SEED environment variable wins over everything else so a
    whole pipeline can be re-seeded without touching its configs.
    """
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}")
    return DEFAULT_SEED if seed is None else int(seed)


# Serialization
def to_jsonable(value):
    """Convert numpy scalars/arrays and complex numbers into plain JSON types"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no NaN/Infinity; null keeps the file parseable everywhere
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def dumps(obj):
    """Deterministic JSON text for reports (stable key order, 2-space indent)"""
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False)


def open_output(path):
    """Return a writable text stream; '-' or None means stdout"""
    if path in (None, '-'):
        return sys.stdout
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, 'w', encoding='utf-8', newline='')
    except OSError as e:
        raise ValidationError(f"Cannot write {path}: {e}")


def write_json(obj, path=None):
    """Write a JSON report to a file or stdout"""
    stream = open_output(path)
    try:
        stream.write(dumps(obj) + '\n')
    finally:
        if stream is not sys.stdout:
            stream.close()


def write_csv(header, columns, rows, path=None):
    """
    Write a CSV table whose first line is '#' + the run's JSON provenance.

    Args:
        header: dict embedded (compact JSON) on the first line
        columns: column names
        rows: iterable of row sequences
        path: file path, or None/'-' for stdout
    """
    stream = open_output(path)
    try:
        stream.write('# ' + json.dumps(to_jsonable(header), separators=(',', ':')) + '\n')
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])
    finally:
        if stream is not sys.stdout:
            stream.close()


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def read_csv_table(text):
    """Parse text written by write_csv back into (header, columns, rows of floats)"""
    lines = text.splitlines()
    if not lines or not lines[0].startswith('#'):
        raise ConfigError('CSV artifact is missing its provenance line')
    header = json.loads(lines[0][1:].strip())
    reader = csv.reader(lines[1:])
    columns = next(reader)
    rows = [[float(v) for v in row] for row in reader if row]
    return header, columns, rows


def parse_range(text):
    """
    Parse 'start:stop:count' into a list of evenly spaced floats.

    A single number is accepted as a one-element list; comma-separated values
    are taken literally.
    """
    try:
        if ':' in text:
            start, stop, count = text.split(':')
            count = int(count)
            if count < 1:
                raise ValueError('count must be positive')
            return [float(v) for v in np.linspace(float(start), float(stop), count)]
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise ConfigError(f"Bad range {text!r}: {e}")
