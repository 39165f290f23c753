"""Phase-switching and static var compensator dispatch for LV radial feeders.

The package minimises negative- and zero-sequence current through the
distribution transformer of a low-voltage radial feeder by choosing phase
assignments for customers equipped with phase-switching devices and a
dispatch for a delta-connected static var compensator.  The optimisation
problem is assembled as a mixed-integer second-order-cone program and
solved with the bundled interior-point solver and branch-and-bound search.
An exact nonlinear power-flow oracle validates every solution.
"""

from . import bnb, cli, conesolver, formulation, linearize, netmodel, pforacle, seqcomp

__all__ = [
    "bnb",
    "cli",
    "conesolver",
    "formulation",
    "linearize",
    "netmodel",
    "pforacle",
    "seqcomp",
]

__version__ = "0.1.0"
