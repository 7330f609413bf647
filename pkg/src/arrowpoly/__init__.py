"""Arrow-polynomial invariants of knotoids and linkoids.

Computes the arrow, twisted arrow, loop arrow, and linkoid arrow polynomials
via the oriented state expansion, builds the decorated marked ribbon graph of
any Kauffman state, evaluates the matching subgraph-sum polynomials, and
checks that the two computation routes agree.
"""

from . import diagram, moves, poly, ribbon, states, thistlethwaite
from .diagram import Diagram
from .poly import Polynomial
from .ribbon import MarkedRibbonGraph

__all__ = [
    "Diagram",
    "MarkedRibbonGraph",
    "Polynomial",
    "diagram",
    "moves",
    "poly",
    "ribbon",
    "states",
    "thistlethwaite",
]
