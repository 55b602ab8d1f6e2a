"""Field-solver evaluation pipeline for the optimizer.

Maps a repaired pixel-grid pair to its two-port S-parameters: build the
coplanar scene, run the time-domain solver, extract spectra. Because the
scene places element B as the mirror of element A, an identical pair is
exactly port-swap symmetric and a single port-1 excitation yields the full
matrix; for differing elements both ports are excited.
"""

from __future__ import annotations

from dataclasses import dataclass

from .emcore import GaussianDerivativePulse, MaterialStack, build_scene, run_fdtd
from .grid import PixelGrid
from .sparam import SParamSet, extract_sparams

__all__ = ["FdtdPairEvaluator"]


@dataclass
class FdtdPairEvaluator:
    """Callable (patch_a, patch_b) -> SParamSet with fixed solver settings.

    ``both_ports=False`` exploits mirror symmetry when the two grids are
    equal (one run instead of two); unequal grids always use two runs.
    """

    materials: MaterialStack
    spacing: float = 5e-3
    resolution: int = 2
    band: tuple = (3e9, 8e9)
    nfreq: int = 251
    max_steps: int = 20000
    both_ports: bool = False
    pulse: GaussianDerivativePulse | None = None
    scene_kwargs: dict | None = None

    def build(self, patch_a: PixelGrid, patch_b: PixelGrid):
        kwargs = self.scene_kwargs or {}
        return build_scene(patch_a, patch_b, self.spacing, self.materials,
                           self.resolution, **kwargs)

    def __call__(self, patch_a: PixelGrid, patch_b: PixelGrid) -> SParamSet:
        scene = self.build(patch_a, patch_b)
        pulse = self.pulse or GaussianDerivativePulse()
        symmetric = (not self.both_ports) and patch_a == patch_b
        runs = [run_fdtd(scene, 1, self.max_steps, pulse)]
        if not symmetric:
            runs.append(run_fdtd(scene, 2, self.max_steps, pulse))
        return extract_sparams(runs, self.band, self.nfreq, symmetric=symmetric)
