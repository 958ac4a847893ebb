"""Numerical laboratory for weighted maximal, sparse and singular-integral inequalities
on one-dimensional dyadic grids."""
from .core import Cube, GridDomain, GridFunction
from .errors import CplabError

__all__ = ["Cube", "GridDomain", "GridFunction", "CplabError"]
__version__ = "0.1.0"
