"""Stokes flow in polygonal domains.

Corner exponents and the corner matrix for the wedge problem, and a Nystrom
solver for the velocity boundary value problem built on them.
"""

from .corner_analysis import Parity
from .geometry import GeometryError, Polygon
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "GeometryError", "Parity", "Polygon", "__version__"]
