"""Substrate stack description."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..constants import EPS0


@dataclass(frozen=True)
class MaterialStack:
    """Grounded single-layer dielectric: relative permittivity, thickness,
    and loss tangent (0 = lossless)."""

    eps_r: float
    h: float
    loss_tangent: float = 0.0

    def __post_init__(self):
        if self.eps_r < 1:
            raise ValueError(f"eps_r must be >= 1, got {self.eps_r}")
        if self.h <= 0:
            raise ValueError(f"substrate thickness must be > 0, got {self.h}")
        if self.loss_tangent < 0:
            raise ValueError(f"loss tangent must be >= 0, got {self.loss_tangent}")

    def conductivity(self, f_ref: float) -> float:
        """Equivalent bulk conductivity (S/m) reproducing the loss tangent at
        ``f_ref``; the solver is non-dispersive so one frequency must stand
        in for the band."""
        return 2 * math.pi * f_ref * EPS0 * self.eps_r * self.loss_tangent


def rogers_like() -> MaterialStack:
    """Preset low-loss PTFE-style laminate: eps_r 2.2, 0.787 mm thick."""
    return MaterialStack(eps_r=2.2, h=0.787e-3)
