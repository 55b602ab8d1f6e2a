"""Voxelized two-port scenes on a uniform Yee lattice.

Geometry conventions
--------------------
Cells are indexed (cx, cy, cz) with sizes (dx, dy, dz); nodes run 0..N per
axis. The ground plane is the z=0 boundary plane (PEC over the whole
footprint); the substrate fills the first ``nsub`` cell layers; patch and
feed metal live on the node plane k = nsub as zero-thickness PEC sheets.
Each patch pixel maps to ``resolution`` x ``resolution`` cells.

Element B is placed as the mirror image of its grid about the lattice
midplane (the usual arrangement for a side-by-side element pair), so a
scene built from two copies of one grid is exactly left-right symmetric
and swapping ports is an exact symmetry of the discrete problem.

Each patch is fed by a strip one pixel wide running toward the y-low edge;
a lumped port (series source resistance, see solver) occupies the column
of vertical edges between ground and the strip's far end.

Audit dump format (``Scene.audit_text``), one line each, parse-stable:

    scene-audit v1
    lattice <Nx> <Ny> <Nz>
    cell <dx> <dy> <dz>
    pml <ncells> order <m> target <R0> kappa <kmax> alpha <amax>
    substrate cells <nsub> eps <eps_r> sigma <S/m>
    pec-edges <total> ex <n> ey <n> ez <n>
    port <idx> i <i> j <j> k <k0>..<k1> strip <x0>+<w> z0 <ohm> rs <ohm>
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..grid import PixelGrid, is_repaired
from .materials import MaterialStack

__all__ = ["Port", "Scene", "build_scene", "thru_scene"]

DEFAULT_NPML = 8
DEFAULT_PML_ORDER = 3
DEFAULT_PML_R_TARGET = 1e-6
DEFAULT_PML_KAPPA_MAX = 3.0
DEFAULT_PML_ALPHA_MAX = 0.05


@dataclass(frozen=True)
class Port:
    """Lumped port on a column of z-directed edges at node column (i, j),
    edge indices k0..k1-1, between ground and the feed strip.

    ``strip_x0``/``strip_w`` record the feed strip's cell span in x at the
    port plane and ``ydir`` which way it leaves the gap; the solver reads
    the port current from the Ampere loop around the gap column itself."""

    index: int            # 1-based
    i: int
    j: int
    k0: int
    k1: int
    strip_x0: int = -1
    strip_w: int = 1
    ydir: int = 1         # +1: strip extends toward +y from the port
    z0: float = 50.0
    rs: float = 50.0

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("port index is 1-based")
        if self.z0 <= 0 or self.rs <= 0:
            raise ValueError(f"z0 and rs must be > 0, got {self.z0}, {self.rs}")
        if self.k1 <= self.k0:
            raise ValueError("empty port column")

    @property
    def ncells(self) -> int:
        return self.k1 - self.k0


@dataclass(frozen=True)
class Scene:
    Nx: int
    Ny: int
    Nz: int
    dx: float
    dy: float
    dz: float
    eps_cells: np.ndarray      # (Nx, Ny, Nz) relative permittivity
    sigma_cells: np.ndarray    # (Nx, Ny, Nz) conductivity, S/m
    pec_ex: np.ndarray         # bool (Nx, Ny+1, Nz+1)
    pec_ey: np.ndarray         # bool (Nx+1, Ny, Nz+1)
    pec_ez: np.ndarray         # bool (Nx+1, Ny+1, Nz)
    ports: tuple
    npml: int = DEFAULT_NPML
    pml_order: int = DEFAULT_PML_ORDER
    pml_r_target: float = DEFAULT_PML_R_TARGET
    pml_kappa_max: float = DEFAULT_PML_KAPPA_MAX
    pml_alpha_max: float = DEFAULT_PML_ALPHA_MAX
    nsub: int = 3
    eps_r: float = 1.0
    sigma_sub: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("eps_cells", "sigma_cells", "pec_ex", "pec_ey", "pec_ez"):
            arr = getattr(self, name)
            arr.flags.writeable = False
        if self.npml < 6:
            raise ValueError(f"absorbing layer must be >= 6 cells, got {self.npml}")
        lo = self.npml
        for p in self.ports:
            if not (lo < p.i < self.Nx - lo and lo < p.j < self.Ny - lo):
                raise ValueError(f"port {p.index} at ({p.i},{p.j}) is not strictly "
                                 "inside the non-absorbing region")
            if p.k1 > self.Nz - lo:
                raise ValueError(f"port {p.index} column reaches the absorbing layer")

    @property
    def shape_cells(self):
        return (self.Nx, self.Ny, self.Nz)

    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def port(self, index: int) -> Port:
        for p in self.ports:
            if p.index == index:
                return p
        raise ValueError(f"no port with index {index}")

    def pec_edge_count(self) -> tuple[int, int, int]:
        return (int(self.pec_ex.sum()), int(self.pec_ey.sum()), int(self.pec_ez.sum()))

    def audit_text(self) -> str:
        nex, ney, nez = self.pec_edge_count()
        lines = [
            "scene-audit v1",
            f"lattice {self.Nx} {self.Ny} {self.Nz}",
            f"cell {self.dx:.9e} {self.dy:.9e} {self.dz:.9e}",
            f"pml {self.npml} order {self.pml_order} target {self.pml_r_target:.1e} "
            f"kappa {self.pml_kappa_max:.3f} alpha {self.pml_alpha_max:.3f}",
            f"substrate cells {self.nsub} eps {self.eps_r:.9e} sigma {self.sigma_sub:.9e}",
            f"pec-edges {nex + ney + nez} ex {nex} ey {ney} ez {nez}",
        ]
        for p in self.ports:
            lines.append(f"port {p.index} i {p.i} j {p.j} k {p.k0}..{p.k1} "
                         f"strip {p.strip_x0}+{p.strip_w} z0 {p.z0:.9e} rs {p.rs:.9e}")
        return "\n".join(lines) + "\n"


def _mark_plane_metal(pec_ex, pec_ey, cells_xy: np.ndarray, k: int) -> None:
    """Zero-thickness metal sheet covering the given cell faces at node
    plane k: mark all tangential edges bordering or inside the covered
    region."""
    m = cells_xy
    pec_ex[:, :-1, k] |= m
    pec_ex[:, 1:, k] |= m
    pec_ey[:-1, :, k] |= m
    pec_ey[1:, :, k] |= m


def _patch_cells(patch: PixelGrid, p: int, x0: int, y0: int, nx_cells: int, ny_cells: int,
                 j_strip0: int, feed_len: int) -> tuple[np.ndarray, int, int]:
    """Cell mask (footprint), port node column, and strip cell origin for
    one element placed unmirrored with its pixel (0, 0) corner cell at
    (x0, y0)."""
    m = np.zeros((nx_cells, ny_cells), dtype=bool)
    expanded = np.repeat(np.repeat(patch.to_matrix().T.astype(bool), p, axis=0), p, axis=1)
    m[x0:x0 + patch.nx * p, y0:y0 + patch.ny * p] = expanded
    fx = patch.feed[0]
    strip_x0 = x0 + fx * p
    m[strip_x0:strip_x0 + p, j_strip0:y0] = True  # feed strip
    port_i = strip_x0 + p // 2
    return m, port_i, strip_x0


def build_scene(patch_a: PixelGrid, patch_b: PixelGrid, spacing: float,
                materials: MaterialStack, resolution: int, *,
                nsub: int = 3,
                lateral_margin: int = 10,
                top_margin: int = 20,
                feed_len_cells: int | None = None,
                port_clearance: int = 3,
                npml: int = DEFAULT_NPML,
                z0: float = 50.0,
                rs: float = 50.0,
                loss_f_ref: float = 5.5e9) -> Scene:
    """Two coplanar pixelated elements over a grounded substrate.

    ``spacing`` is the edge-to-edge element gap in meters (zero allowed,
    the elements then sit on adjacent cells). ``resolution`` is lattice
    cells per pixel edge (>= 2). Both grids must already be repaired.
    Element B is mirrored; see module docstring.
    """
    p = int(resolution)
    if p < 2 or p != resolution:
        raise ValueError(f"resolution must be an integer >= 2, got {resolution}")
    if spacing < 0:
        raise ValueError(f"spacing must be >= 0, got {spacing}")
    if patch_a.pitch != patch_b.pitch:
        raise ValueError("both patches must share one pixel pitch")
    for name, g in (("A", patch_a), ("B", patch_b)):
        if not is_repaired(g):
            raise ValueError(f"patch {name} has floating pixels; run repair_floating first")
    if lateral_margin < 10 or top_margin < 10:
        raise ValueError("air margins must be >= 10 cells")
    if nsub < 3:
        raise ValueError(f"substrate needs >= 3 cells, got {nsub}")

    dx = dy = patch_a.pitch / p
    dz = materials.h / nsub
    gap_cells = int(round(spacing / dx))
    if feed_len_cells is None:
        feed_len_cells = 2 * p
    if feed_len_cells < 1:
        raise ValueError("the feed strip needs at least one cell between port and patch")
    wa, wb = patch_a.nx * p, patch_b.nx * p

    Nx = 2 * (npml + lateral_margin) + wa + gap_cells + wb
    j_port = npml + port_clearance
    y_patch0 = j_port + feed_len_cells
    Ny = y_patch0 + max(patch_a.ny, patch_b.ny) * p + lateral_margin + npml
    ks = nsub
    Nz = nsub + top_margin + npml

    eps = np.ones((Nx, Ny, Nz))
    eps[:, :, :nsub] = materials.eps_r
    sigma = np.zeros((Nx, Ny, Nz))
    sigma_sub = materials.conductivity(loss_f_ref)
    sigma[:, :, :nsub] = sigma_sub

    pec_ex = np.zeros((Nx, Ny + 1, Nz + 1), dtype=bool)
    pec_ey = np.zeros((Nx + 1, Ny, Nz + 1), dtype=bool)
    pec_ez = np.zeros((Nx + 1, Ny + 1, Nz), dtype=bool)
    pec_ex[:, :, 0] = True   # ground plane on the z=0 boundary
    pec_ey[:, :, 0] = True

    xa0 = npml + lateral_margin
    cells_a, port_i_a, strip_a = _patch_cells(patch_a, p, xa0, y_patch0, Nx, Ny,
                                              j_port, feed_len_cells)
    # element B: build in the left slot frame, then mirror into place
    xb0_virtual = npml + lateral_margin
    cells_b_v, port_i_b_v, strip_b_v = _patch_cells(patch_b, p, xb0_virtual, y_patch0,
                                                    Nx, Ny, j_port, feed_len_cells)
    cells_b = cells_b_v[::-1, :].copy()
    port_i_b = Nx - port_i_b_v
    strip_b = Nx - strip_b_v - p

    if (cells_a & cells_b).any():
        raise ValueError("element footprints overlap; increase spacing")

    _mark_plane_metal(pec_ex, pec_ey, cells_a, ks)
    _mark_plane_metal(pec_ex, pec_ey, cells_b, ks)

    ports = (Port(1, port_i_a, j_port, 0, ks, strip_a, p, 1, z0, rs),
             Port(2, port_i_b, j_port, 0, ks, strip_b, p, 1, z0, rs))

    meta = {
        "kind": "patch-pair",
        "resolution": p,
        "gap_cells": gap_cells,
        "spacing": spacing,
        "cells_metal": int(cells_a.sum() + cells_b.sum()),
    }
    return Scene(Nx, Ny, Nz, dx, dy, dz, eps, sigma, pec_ex, pec_ey, pec_ez,
                 ports, npml=npml, nsub=nsub, eps_r=materials.eps_r,
                 sigma_sub=sigma_sub, meta=meta)


def thru_scene(materials: MaterialStack, dx: float, *,
               nsub: int = 3,
               strip_len_cells: int = 3,
               strip_width_cells: int = 4,
               margin: int = 10,
               port_clearance: int = 3,
               npml: int = DEFAULT_NPML,
               z0: float = 50.0,
               rs: float = 50.0) -> Scene:
    """Two ports bridged by a short strip: the source port sees the far
    port's termination through a near-zero-length line, i.e. an almost
    matched load. Used for extraction validation."""
    w = strip_width_cells
    dz = materials.h / nsub
    Nx = 2 * (npml + margin) + w
    j0 = npml + port_clearance
    j1 = j0 + strip_len_cells
    Ny = j1 + port_clearance + npml
    Nz = nsub + max(10, 4 * nsub) + npml

    eps = np.ones((Nx, Ny, Nz))
    eps[:, :, :nsub] = materials.eps_r
    sigma = np.zeros((Nx, Ny, Nz))

    pec_ex = np.zeros((Nx, Ny + 1, Nz + 1), dtype=bool)
    pec_ey = np.zeros((Nx + 1, Ny, Nz + 1), dtype=bool)
    pec_ez = np.zeros((Nx + 1, Ny + 1, Nz), dtype=bool)
    pec_ex[:, :, 0] = True
    pec_ey[:, :, 0] = True

    x0 = npml + margin
    cells = np.zeros((Nx, Ny), dtype=bool)
    cells[x0:x0 + w, j0:j1] = True
    _mark_plane_metal(pec_ex, pec_ey, cells, nsub)

    ic = x0 + w // 2
    ports = (Port(1, ic, j0, 0, nsub, x0, w, 1, z0, rs),
             Port(2, ic, j1, 0, nsub, x0, w, -1, z0, rs))
    meta = {"kind": "thru", "strip_len_cells": strip_len_cells}
    return Scene(Nx, Ny, Nz, dx, dx, dz, eps, sigma, pec_ex, pec_ey, pec_ez,
                 ports, npml=npml, nsub=nsub, eps_r=materials.eps_r,
                 sigma_sub=0.0, meta=meta)
