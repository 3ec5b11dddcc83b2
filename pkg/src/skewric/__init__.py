"""skewric: calculus of plane-chart connections with skew-symmetric Ricci
tensor, their flat decompositions and canonical forms, geodesic first
integrals, and Petrov-III certification of the induced neutral-signature
extension metrics on the cotangent bundle."""

from . import chart, dynamics, expr, lie2, surface, walker4
from .kernel import backend_name

__version__ = "0.1.0"

__all__ = ["chart", "dynamics", "expr", "lie2", "surface", "walker4",
           "backend_name", "__version__"]
