"""Pixelated patch antenna pair synthesis toolkit.

Binary pixel grids describe each element's metallization; a desk-scale
time-domain field solver evaluates the coupled two-port S-parameters; and a
binary particle swarm searches pixel patterns for impedance match at the
design frequency together with maximal element-to-element isolation, with
no decoupling structures added between the elements.
"""

__version__ = "0.1.0"

from . import bench, emcore, evaluator, grid, optim, sparam
from .grid import PixelGrid, make_grid, random_grid, repair_floating

__all__ = [
    "bench",
    "emcore",
    "evaluator",
    "grid",
    "optim",
    "sparam",
    "PixelGrid",
    "make_grid",
    "random_grid",
    "repair_floating",
    "__version__",
]
