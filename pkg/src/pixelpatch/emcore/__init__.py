"""Desk-scale time-domain field solver: scene building, Yee-lattice leapfrog
updates with convolutional absorbing boundaries, and lumped resistive ports."""

from .materials import MaterialStack, rogers_like
from .pulse import GaussianDerivativePulse
from .scene import Port, Scene, build_scene, thru_scene
from .solver import (
    FieldState,
    NumericalInstabilityError,
    TimeSeries,
    courant_dt,
    run_fdtd,
    total_field_energy,
)

__all__ = [
    "MaterialStack",
    "rogers_like",
    "GaussianDerivativePulse",
    "Port",
    "Scene",
    "build_scene",
    "thru_scene",
    "FieldState",
    "NumericalInstabilityError",
    "TimeSeries",
    "courant_dt",
    "run_fdtd",
    "total_field_energy",
]
