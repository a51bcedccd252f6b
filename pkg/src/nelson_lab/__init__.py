"""Nelson stochastic mechanics in one dimension.

Schrodinger oracle, Madelung decomposition, walker ensembles driven by the
forward and backward drifts, kinetic-energy estimators, hidden-variable
joint densities and the particle on a circle.
"""

from .fields import Grid
from .params import PhysParams

__all__ = ["Grid", "PhysParams"]
__version__ = "0.1.0"
