"""Closed-form rectangular-patch baselines.

The cavity-model resonance estimate serves as the independent physical
oracle for the field solver, and the synthesized standard patch is the
unpixelated reference design that isolation improvements are quoted
against. Model accuracy is the usual 2-3% of the cavity formulas, on top
of whatever staircasing the pixel lattice adds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import C0

__all__ = [
    "PatchDims",
    "effective_permittivity",
    "fringing_extension",
    "hammerstad_resonance",
    "design_standard_patch",
    "isolation_improvement",
    "GPS_F0",
]

# Named preset: GPS L1 carrier. Recorded for dims-only synthesis; the
# desk-scale solver band does not reach down here.
GPS_F0 = 1.57e9


@dataclass(frozen=True)
class PatchDims:
    """Rectangular patch dimensions with derived cavity-model quantities."""

    W: float          # width (m), the non-resonant edge
    L: float          # length (m), the resonant edge
    delta_L: float    # fringing length extension (m)
    eps_eff: float    # effective permittivity


def effective_permittivity(W: float, eps_r: float, h: float) -> float:
    if W <= 0 or h <= 0 or eps_r < 1:
        raise ValueError(f"non-physical inputs W={W}, eps_r={eps_r}, h={h}")
    return (eps_r + 1) / 2 + (eps_r - 1) / 2 * (1 + 12 * h / W) ** -0.5


def fringing_extension(W: float, eps_r: float, h: float) -> float:
    eps_eff = effective_permittivity(W, eps_r, h)
    return 0.412 * h * (eps_eff + 0.3) * (W / h + 0.264) / (
        (eps_eff - 0.258) * (W / h + 0.8))


def hammerstad_resonance(W: float, L: float, eps_r: float, h: float) -> float:
    """Dominant-mode resonance (Hz) of a W x L patch on eps_r / h."""
    if L <= 0:
        raise ValueError(f"non-physical patch length L={L}")
    eps_eff = effective_permittivity(W, eps_r, h)
    dL = fringing_extension(W, eps_r, h)
    return C0 / (2 * (L + 2 * dL) * math.sqrt(eps_eff))


def design_standard_patch(f0: float, eps_r: float, h: float,
                          tol_hz: float = 1e3) -> PatchDims:
    """Synthesize W and L so the patch resonates at ``f0``.

    W uses the standard width formula; L is found by bisection on the
    resonance formula until the residual is below ``tol_hz``.
    """
    if f0 <= 0:
        raise ValueError(f"design frequency must be > 0, got {f0}")
    W = C0 / (2 * f0) * math.sqrt(2 / (eps_r + 1))
    # resonance is monotone decreasing in L; bracket from tiny to one wavelength
    lo, hi = 1e-6, C0 / f0
    if not (hammerstad_resonance(W, lo, eps_r, h) > f0 > hammerstad_resonance(W, hi, eps_r, h)):
        raise ArithmeticError(f"bisection bracket failed for f0={f0}, eps_r={eps_r}, h={h}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fr = hammerstad_resonance(W, mid, eps_r, h)
        if abs(fr - f0) <= tol_hz:
            return PatchDims(W, mid, fringing_extension(W, eps_r, h),
                             effective_permittivity(W, eps_r, h))
        if fr > f0:
            lo = mid
        else:
            hi = mid
    raise ArithmeticError(f"patch length bisection did not reach {tol_hz} Hz for f0={f0}")


def isolation_improvement(baseline, optimized, f0: float) -> float:
    """S21 of the baseline minus S21 of the optimized set, in dB, at ``f0``.

    Positive means the optimized design is better isolated. Both sets must
    cover ``f0``; accepts any object with the SParamSet interface.
    """
    from .sparam import db_mag

    return db_mag(baseline.s_at(f0)[1, 0]) - db_mag(optimized.s_at(f0)[1, 0])
