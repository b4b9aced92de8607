"""
pdm-spectra: position-dependent-mass Liénard oscillators
Exact and quasi-exact quantum spectra under arbitrary kinetic orderings,
with a finite-difference oracle and the classical isochronicity checks

License: MIT
"""

__version__ = "0.1.0"
__author__ = "pdm-spectra contributors"
__description__ = "Spectra of position-dependent-mass quadratic Liénard oscillators"

from .catalog import PdmSystem, SystemId, make_system
from .numeric import GridSpec, NumericSolver
from .ordering import OrderingScheme, aggregate, preset
from .utils import ConfigError, PdmError, SolverError, ValidationError

__all__ = [
    'PdmSystem',
    'SystemId',
    'make_system',
    'OrderingScheme',
    'aggregate',
    'preset',
    'GridSpec',
    'NumericSolver',
    'solve_spectrum',
    'check_ordering',
    'PdmError',
    'ConfigError',
    'ValidationError',
    'SolverError',
]


def solve_spectrum(system, ordering, levels=6, points=None, verbose=False):
    """
    Lowest eigenvalues of a catalog system under an ordering.

    Args:
        system: PdmSystem (see make_system)
        ordering: preset name such as 'vonroos:a34', or an OrderingScheme
        levels: number of eigenvalues
        points: interior grid points; None picks at least 4001 from the
            system's harmonic length
        verbose: Enable verbose logging

    Returns:
        The spectrum report dict - see docs/schema.md.

    Raises:
        ValidationError: bad parameters or a grid touching a singular point
        SolverError: the eigen-solve failed
    """
    return NumericSolver(GridSpec(points=points), verbose=verbose).solve(system, ordering, levels)


def check_ordering(ordering):
    """
    Solvability functionals of an ordering.

    Returns:
        dict with the aggregate, A (exponential system, exact at 3/4) and
        B (nonpolynomial system, exact at 2)
    """
    from .ordering import constraint_A, constraint_B_nonpoly, scheme_from_config

    agg = aggregate(scheme_from_config(ordering))
    return {'aggregate': agg.to_dict(), 'A': constraint_A(agg), 'B': constraint_B_nonpoly(agg)}
