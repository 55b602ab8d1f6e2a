"""Leapfrog Yee-lattice field solver with convolutional absorbing layers.

Field arrays and staggering (cells Nx, Ny, Nz; nodes 0..N per axis):

    Ex (Nx,   Ny+1, Nz+1)  at (i+1/2, j,     k)
    Ey (Nx+1, Ny,   Nz+1)  at (i,     j+1/2, k)
    Ez (Nx+1, Ny+1, Nz)    at (i,     j,     k+1/2)
    Hx (Nx+1, Ny,   Nz)    at (i,     j+1/2, k+1/2)
    Hy (Nx,   Ny+1, Nz)    at (i+1/2, j,     k+1/2)
    Hz (Nx,   Ny,   Nz+1)  at (i+1/2, j+1/2, k)

The lattice boundary is a PEC box (tangential E never updated there); the
z=0 face doubles as the ground plane. Absorbing layers line the x/y faces
and the top; their graded conductivity / stretching / shift profiles follow
the usual polynomial recipe with the per-scene order and reflection target.

PEC sheets are imposed by zeroed update coefficients, so marked edges stay
exactly 0 for all time. Lumped ports are columns of z-edges carrying a
series-resistor voltage source, integrated semi-implicitly (uncondition-
ally stable). Port voltage is the -E.dl line integral over the gap column;
port current is the discrete Ampere loop of H around the gap column,
averaged over the column's levels.

Timeline bookkeeping for one recorded step m (0-based):

    source_v[m]  at t = (m + 0.5) dt   (drives the E update)
    v[:, m]      at t = (m + 1.0) dt   (after the E update)
    i[:, m]      at t = (m + 1.5) dt   (after the H update)

The exact offsets matter for S-parameter phase and are consumed by the
spectral extraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..constants import C0, EPS0, MU0
from .pulse import GaussianDerivativePulse
from .scene import Scene

__all__ = [
    "courant_dt",
    "run_fdtd",
    "total_field_energy",
    "FieldState",
    "TimeSeries",
    "NumericalInstabilityError",
]


class NumericalInstabilityError(RuntimeError):
    """Non-finite field values appeared; ``step`` is the update index.

    Signals a stability or material bug, never a property of one design, so
    optimizer runs abort on it instead of scoring the particle as failed
    (``fatal_to_run`` is honored by the swarm's evaluation loop).
    """

    fatal_to_run = True

    def __init__(self, step: int, detail: str = ""):
        msg = f"non-finite fields at step {step}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.step = step


def courant_dt(scene: Scene, cfl: float = 0.99) -> float:
    """Stable leapfrog time step: cfl / (c0 sqrt(1/dx^2 + 1/dy^2 + 1/dz^2))."""
    if scene.dx <= 0 or scene.dy <= 0 or scene.dz <= 0:
        raise ValueError("cell sizes must be positive")
    rad = math.sqrt(scene.dx ** -2 + scene.dy ** -2 + scene.dz ** -2)
    return cfl / (C0 * rad)


# ---------------------------------------------------------------------------
# material and absorbing-layer coefficient tables
# ---------------------------------------------------------------------------

def _edge_average(cells: np.ndarray, axes: tuple[int, int]) -> np.ndarray:
    """Average a per-cell quantity onto the edges perpendicular-staggered in
    ``axes`` (the two axes where the edge sits on integer node planes)."""
    pad = [(0, 0)] * 3
    for a in axes:
        pad[a] = (1, 1)
    c = np.pad(cells, pad, mode="edge")
    a0, a1 = axes
    sl = [slice(None)] * 3

    def take(off0, off1):
        s = list(sl)
        n0, n1 = cells.shape[a0] + 1, cells.shape[a1] + 1
        s[a0] = slice(off0, off0 + n0)
        s[a1] = slice(off1, off1 + n1)
        return c[tuple(s)]

    return 0.25 * (take(0, 0) + take(0, 1) + take(1, 0) + take(1, 1))


def _pml_profiles(n_cells: int, d: float, dt: float, npml: int, order: int,
                  r_target: float, kappa_max: float, alpha_max: float,
                  lo: bool, hi: bool):
    """1-D CPML recursion coefficients (b, c) and inverse stretching for one
    axis, evaluated at integer node positions (E) and half positions (H)."""
    smax = -(order + 1) * EPS0 * C0 * math.log(r_target) / (2.0 * npml * d)

    def tables(pos):
        sig = np.zeros_like(pos)
        kap = np.ones_like(pos)
        alp = np.zeros_like(pos)
        if lo:
            m = pos < npml
            depth = (npml - pos[m]) / npml
            sig[m] = smax * depth ** order
            kap[m] = 1 + (kappa_max - 1) * depth ** order
            alp[m] = alpha_max * (1 - depth)
        if hi:
            m = pos > n_cells - npml
            depth = (pos[m] - (n_cells - npml)) / npml
            sig[m] = smax * depth ** order
            kap[m] = 1 + (kappa_max - 1) * depth ** order
            alp[m] = alpha_max * (1 - depth)
        b = np.exp(-(sig / kap + alp) * dt / EPS0)
        denom = kap * (sig + kap * alp)
        c = np.zeros_like(pos)
        nz = sig > 0
        c[nz] = sig[nz] * (b[nz] - 1.0) / denom[nz]
        return b, c, 1.0 / kap

    be, ce, ike = tables(np.arange(n_cells + 1, dtype=float))
    bh, ch, ikh = tables(np.arange(n_cells, dtype=float) + 0.5)
    return be, ce, ike, bh, ch, ikh


def _material_coefficients(scene: Scene, dt: float):
    """Per-edge (ca, cb) pairs for the E update; PEC and port edges zeroed."""
    out = []
    for comp, axes, pec in (("x", (1, 2), scene.pec_ex),
                            ("y", (0, 2), scene.pec_ey),
                            ("z", (0, 1), scene.pec_ez)):
        eps = EPS0 * _edge_average(scene.eps_cells, axes)
        sig = _edge_average(scene.sigma_cells, axes)
        s = sig * dt / (2.0 * eps)
        ca = (1.0 - s) / (1.0 + s)
        cb = dt / (eps * (1.0 + s))
        ca[pec] = 0.0
        cb[pec] = 0.0
        out.append((ca, cb, eps, sig))
    return out


# ---------------------------------------------------------------------------
# jitted update kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _step_e(ex, ey, ez, hx, hy, hz,
            cax, cbx, cay, cby, caz, cbz,
            be_x, ce_x, ike_x, be_y, ce_y, ike_y, be_z, ce_z, ike_z,
            p_exy, p_exz, p_eyz, p_eyx, p_ezx, p_ezy,
            idx, idy, idz):
    Nx = ex.shape[0]
    Ny = ey.shape[1]
    Nz = ez.shape[2]
    for i in range(Nx):
        for j in range(1, Ny):
            by = be_y[j]
            cy = ce_y[j]
            iky = ike_y[j]
            for k in range(1, Nz):
                a = (hz[i, j, k] - hz[i, j - 1, k]) * idy
                b = (hy[i, j, k] - hy[i, j, k - 1]) * idz
                acc = a * iky - b * ike_z[k]
                if cy != 0.0:
                    q = by * p_exy[i, j, k] + cy * a
                    p_exy[i, j, k] = q
                    acc += q
                cz = ce_z[k]
                if cz != 0.0:
                    q = be_z[k] * p_exz[i, j, k] + cz * b
                    p_exz[i, j, k] = q
                    acc -= q
                ex[i, j, k] = cax[i, j, k] * ex[i, j, k] + cbx[i, j, k] * acc
    for i in range(1, Nx):
        bx = be_x[i]
        cx = ce_x[i]
        ikx = ike_x[i]
        for j in range(Ny):
            for k in range(1, Nz):
                a = (hx[i, j, k] - hx[i, j, k - 1]) * idz
                b = (hz[i, j, k] - hz[i - 1, j, k]) * idx
                acc = a * ike_z[k] - b * ikx
                cz = ce_z[k]
                if cz != 0.0:
                    q = be_z[k] * p_eyz[i, j, k] + cz * a
                    p_eyz[i, j, k] = q
                    acc += q
                if cx != 0.0:
                    q = bx * p_eyx[i, j, k] + cx * b
                    p_eyx[i, j, k] = q
                    acc -= q
                ey[i, j, k] = cay[i, j, k] * ey[i, j, k] + cby[i, j, k] * acc
    for i in range(1, Nx):
        bx = be_x[i]
        cx = ce_x[i]
        ikx = ike_x[i]
        for j in range(1, Ny):
            by = be_y[j]
            cy = ce_y[j]
            iky = ike_y[j]
            for k in range(Nz):
                a = (hy[i, j, k] - hy[i - 1, j, k]) * idx
                b = (hx[i, j, k] - hx[i, j - 1, k]) * idy
                acc = a * ikx - b * iky
                if cx != 0.0:
                    q = bx * p_ezx[i, j, k] + cx * a
                    p_ezx[i, j, k] = q
                    acc += q
                if cy != 0.0:
                    q = by * p_ezy[i, j, k] + cy * b
                    p_ezy[i, j, k] = q
                    acc -= q
                ez[i, j, k] = caz[i, j, k] * ez[i, j, k] + cbz[i, j, k] * acc


@njit(cache=True)
def _step_h(ex, ey, ez, hx, hy, hz, chm,
            bh_x, ch_x, ikh_x, bh_y, ch_y, ikh_y, bh_z, ch_z, ikh_z,
            p_hxy, p_hxz, p_hyz, p_hyx, p_hzx, p_hzy,
            idx, idy, idz):
    Nx = ex.shape[0]
    Ny = ey.shape[1]
    Nz = ez.shape[2]
    for i in range(Nx + 1):
        for j in range(Ny):
            by = bh_y[j]
            cy = ch_y[j]
            iky = ikh_y[j]
            for k in range(Nz):
                a = (ez[i, j + 1, k] - ez[i, j, k]) * idy
                b = (ey[i, j, k + 1] - ey[i, j, k]) * idz
                acc = a * iky - b * ikh_z[k]
                if cy != 0.0:
                    q = by * p_hxy[i, j, k] + cy * a
                    p_hxy[i, j, k] = q
                    acc += q
                cz = ch_z[k]
                if cz != 0.0:
                    q = bh_z[k] * p_hxz[i, j, k] + cz * b
                    p_hxz[i, j, k] = q
                    acc -= q
                hx[i, j, k] -= chm * acc
    for i in range(Nx):
        bx = bh_x[i]
        cx = ch_x[i]
        ikx = ikh_x[i]
        for j in range(Ny + 1):
            for k in range(Nz):
                a = (ex[i, j, k + 1] - ex[i, j, k]) * idz
                b = (ez[i + 1, j, k] - ez[i, j, k]) * idx
                acc = a * ikh_z[k] - b * ikx
                cz = ch_z[k]
                if cz != 0.0:
                    q = bh_z[k] * p_hyz[i, j, k] + cz * a
                    p_hyz[i, j, k] = q
                    acc += q
                if cx != 0.0:
                    q = bx * p_hyx[i, j, k] + cx * b
                    p_hyx[i, j, k] = q
                    acc -= q
                hy[i, j, k] -= chm * acc
    for i in range(Nx):
        bx = bh_x[i]
        cx = ch_x[i]
        ikx = ikh_x[i]
        for j in range(Ny):
            by = bh_y[j]
            cy = ch_y[j]
            iky = ikh_y[j]
            for k in range(Nz + 1):
                a = (ey[i + 1, j, k] - ey[i, j, k]) * idx
                b = (ex[i, j + 1, k] - ex[i, j, k]) * idy
                acc = a * ikx - b * iky
                if cx != 0.0:
                    q = bx * p_hzx[i, j, k] + cx * a
                    p_hzx[i, j, k] = q
                    acc += q
                if cy != 0.0:
                    q = by * p_hzy[i, j, k] + cy * b
                    p_hzy[i, j, k] = q
                    acc -= q
                hz[i, j, k] -= chm * acc


# ---------------------------------------------------------------------------
# field state, energy
# ---------------------------------------------------------------------------

@dataclass
class FieldState:
    """Snapshot of all six field arrays on a scene's lattice."""

    scene: Scene
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray

    @classmethod
    def zeros(cls, scene: Scene) -> "FieldState":
        Nx, Ny, Nz = scene.shape_cells
        return cls(
            scene,
            np.zeros((Nx, Ny + 1, Nz + 1)),
            np.zeros((Nx + 1, Ny, Nz + 1)),
            np.zeros((Nx + 1, Ny + 1, Nz)),
            np.zeros((Nx + 1, Ny, Nz)),
            np.zeros((Nx, Ny + 1, Nz)),
            np.zeros((Nx, Ny, Nz + 1)),
        )


def _interior_slices(scene: Scene):
    """Per-component index slices covering the non-absorbing region."""
    n = scene.npml
    Nx, Ny, Nz = scene.Nx, scene.Ny, scene.Nz
    cx, cy, cz = slice(n, Nx - n), slice(n, Ny - n), slice(0, Nz - n)
    nxs, nys = slice(n, Nx - n + 1), slice(n, Ny - n + 1)
    nzs = slice(0, Nz - n + 1)
    return {
        "ex": (cx, nys, nzs),
        "ey": (nxs, cy, nzs),
        "ez": (nxs, nys, cz),
        "hx": (nxs, cy, cz),
        "hy": (cx, nys, cz),
        "hz": (cx, cy, nzs),
    }


def _edge_permittivities(scene: Scene):
    return (EPS0 * _edge_average(scene.eps_cells, (1, 2)),
            EPS0 * _edge_average(scene.eps_cells, (0, 2)),
            EPS0 * _edge_average(scene.eps_cells, (0, 1)))


def _electric_energy(scene: Scene, ex, ey, ez, sl, eps_edges=None) -> float:
    dv = scene.cell_volume()
    epsx, epsy, epsz = eps_edges if eps_edges is not None else _edge_permittivities(scene)
    return 0.5 * dv * (
        float(np.sum(epsx[sl["ex"]] * ex[sl["ex"]] ** 2))
        + float(np.sum(epsy[sl["ey"]] * ey[sl["ey"]] ** 2))
        + float(np.sum(epsz[sl["ez"]] * ez[sl["ez"]] ** 2))
    )


def total_field_energy(state: FieldState) -> float:
    """1/2 sum(eps |E|^2 + mu |H|^2) x cell volume over the non-absorbing
    region of the lattice. Non-negative by construction."""
    sl = _interior_slices(state.scene)
    dv = state.scene.cell_volume()
    ue = _electric_energy(state.scene, state.ex, state.ey, state.ez, sl)
    uh = 0.5 * MU0 * dv * (
        float(np.sum(state.hx[sl["hx"]] ** 2))
        + float(np.sum(state.hy[sl["hy"]] ** 2))
        + float(np.sum(state.hz[sl["hz"]] ** 2))
    )
    return ue + uh


def _port_current(scene: Scene, p, hx, hy) -> float:
    """Current up the gap column into the element: the H line integral
    around the column (discrete Ampere loop, one cell wide), averaged over
    the column's levels. Includes the gap cell's displacement share, which
    the wave decomposition absorbs into the element's input reactance."""
    loops = (hy[p.i, p.j, p.k0:p.k1] - hy[p.i - 1, p.j, p.k0:p.k1]) * scene.dy \
        - (hx[p.i, p.j, p.k0:p.k1] - hx[p.i, p.j - 1, p.k0:p.k1]) * scene.dx
    return float(loops.mean())


# ---------------------------------------------------------------------------
# recorded run
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSeries:
    """Per-port sampled voltages/currents from one excitation run.

    Sample m of ``v`` is taken at t=(m+1)dt, of ``i`` at t=(m+1.5)dt, and of
    ``source_v`` at t=(m+0.5)dt; extraction applies these offsets exactly.
    ``energy`` holds the time-centered discrete field energy over the
    non-absorbing region at the steps in ``energy_steps`` (the leapfrog
    invariant form: E paired with the product of bracketing H half-steps).
    """

    dt: float
    v: np.ndarray             # (nports, nsteps)
    i: np.ndarray             # (nports, nsteps)
    source_v: np.ndarray      # (nsteps,)
    active_port: int
    z0: tuple
    rs: tuple
    pulse: GaussianDerivativePulse
    energy_steps: np.ndarray
    energy: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.v.shape != self.i.shape:
            raise ValueError("v and i sample arrays must have equal shape")
        if self.v.shape[1] != self.source_v.shape[0]:
            raise ValueError("source record length differs from port records")
        if not (np.isfinite(self.v).all() and np.isfinite(self.i).all()):
            raise ValueError("non-finite samples in time series")

    @property
    def nports(self) -> int:
        return self.v.shape[0]

    @property
    def nsteps(self) -> int:
        return self.v.shape[1]

    def source_extinct_step(self) -> int:
        """First sample index past the excitation's extinction time."""
        return int(math.ceil(self.pulse.extinction_time / self.dt)) + 1

    def trailing_energy_ratio(self, window: int = 500) -> float:
        """Signal energy of the last full window over the peak window; the
        decay figure used to judge whether spectra are trustworthy."""
        power = np.sum(self.v ** 2, axis=0)
        nwin = power.size // window
        if nwin < 2:
            return 1.0
        sums = power[:nwin * window].reshape(nwin, window).sum(axis=1)
        peak = float(sums.max())
        if peak <= 0.0:
            return 0.0
        return float(sums[-1] / peak)


def run_fdtd(scene: Scene, active_port: int = 1, max_steps: int = 20000,
             pulse: GaussianDerivativePulse | None = None, *,
             cfl: float = 0.99,
             energy_sample_every: int = 50,
             early_stop: bool = True,
             stop_energy_ratio: float = 1e-8,
             stop_window: int = 500,
             check_finite_every: int = 250) -> TimeSeries:
    """Excite ``active_port`` and record all port waveforms.

    Every port keeps its series-resistance termination at all times; only
    the active one carries the source voltage. The run stops early once the
    windowed port-signal energy falls below ``stop_energy_ratio`` of its
    peak window (after the source has died out), else after ``max_steps``.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    port_idx = [p.index for p in scene.ports]
    if active_port not in port_idx:
        raise ValueError(f"no port with index {active_port} (have {port_idx})")
    if pulse is None:
        pulse = GaussianDerivativePulse()

    dt = courant_dt(scene, cfl)
    Nx, Ny, Nz = scene.shape_cells
    idx, idy, idz = 1.0 / scene.dx, 1.0 / scene.dy, 1.0 / scene.dz
    st = FieldState.zeros(scene)
    ex, ey, ez, hx, hy, hz = st.ex, st.ey, st.ez, st.hx, st.hy, st.hz

    (cax, cbx, _, _), (cay, cby, _, _), (caz, cbz, epsz_abs, sigz) = \
        _material_coefficients(scene, dt)

    # ports keep their own update; blank the standard one on their edges
    caz = caz.copy()
    cbz = cbz.copy()
    port_coef = []
    area = scene.dx * scene.dy
    for p in scene.ports:
        ksl = slice(p.k0, p.k1)
        caz[p.i, p.j, ksl] = 1.0
        cbz[p.i, p.j, ksl] = 0.0
        eps_col = epsz_abs[p.i, p.j, ksl]
        sig_col = sigz[p.i, p.j, ksl]
        g_branch = p.ncells * scene.dz / (p.rs * area)
        beta = dt * (sig_col + g_branch) / (2.0 * eps_col)
        pc1 = (1.0 - beta) / (1.0 + beta)
        pc2 = (dt / eps_col) / (1.0 + beta)
        pc3 = pc2 / (p.rs * area)
        port_coef.append((p, ksl, pc1, pc2, pc3))

    pml_args = {}
    for name, (n_cells, d, lo, hi) in {
        "x": (Nx, scene.dx, True, True),
        "y": (Ny, scene.dy, True, True),
        "z": (Nz, scene.dz, False, True),   # ground closes the bottom face
    }.items():
        pml_args[name] = _pml_profiles(n_cells, d, dt, scene.npml,
                                       scene.pml_order, scene.pml_r_target,
                                       scene.pml_kappa_max, scene.pml_alpha_max,
                                       lo, hi)

    be_x, ce_x, ike_x, bh_x, ch_x, ikh_x = pml_args["x"]
    be_y, ce_y, ike_y, bh_y, ch_y, ikh_y = pml_args["y"]
    be_z, ce_z, ike_z, bh_z, ch_z, ikh_z = pml_args["z"]

    p_exy, p_exz = np.zeros_like(ex), np.zeros_like(ex)
    p_eyz, p_eyx = np.zeros_like(ey), np.zeros_like(ey)
    p_ezx, p_ezy = np.zeros_like(ez), np.zeros_like(ez)
    p_hxy, p_hxz = np.zeros_like(hx), np.zeros_like(hx)
    p_hyz, p_hyx = np.zeros_like(hy), np.zeros_like(hy)
    p_hzx, p_hzy = np.zeros_like(hz), np.zeros_like(hz)

    chm = dt / MU0
    nports = len(scene.ports)
    v_rec = np.zeros((nports, max_steps))
    i_rec = np.zeros((nports, max_steps))
    s_rec = np.zeros(max_steps)
    energy_steps: list[int] = []
    energies: list[float] = []
    sl = _interior_slices(scene)
    dv = scene.cell_volume()
    eps_edges = _edge_permittivities(scene) if energy_sample_every else None

    extinct_t = pulse.extinction_time
    win_acc = 0.0
    win_sums: list[float] = []
    steps_done = max_steps

    for n in range(max_steps):
        _step_e(ex, ey, ez, hx, hy, hz, cax, cbx, cay, cby, caz, cbz,
                be_x, ce_x, ike_x, be_y, ce_y, ike_y, be_z, ce_z, ike_z,
                p_exy, p_exz, p_eyz, p_eyx, p_ezx, p_ezy, idx, idy, idz)

        t_half = (n + 0.5) * dt
        vs = float(pulse(t_half))
        s_rec[n] = vs
        for p, ksl, pc1, pc2, pc3 in port_coef:
            col_curl = (hy[p.i, p.j, ksl] - hy[p.i - 1, p.j, ksl]) * idx \
                - (hx[p.i, p.j, ksl] - hx[p.i, p.j - 1, ksl]) * idy
            drive = vs if p.index == active_port else 0.0
            ez[p.i, p.j, ksl] = pc1 * ez[p.i, p.j, ksl] + pc2 * col_curl - pc3 * drive

        for q, p in enumerate(scene.ports):
            v_rec[q, n] = -scene.dz * float(ez[p.i, p.j, p.k0:p.k1].sum())

        sample_energy = energy_sample_every and (n + 1) % energy_sample_every == 0
        if sample_energy:
            hx_prev, hy_prev, hz_prev = hx.copy(), hy.copy(), hz.copy()

        _step_h(ex, ey, ez, hx, hy, hz, chm,
                bh_x, ch_x, ikh_x, bh_y, ch_y, ikh_y, bh_z, ch_z, ikh_z,
                p_hxy, p_hxz, p_hyz, p_hyx, p_hzx, p_hzy, idx, idy, idz)

        for q, p in enumerate(scene.ports):
            i_rec[q, n] = _port_current(scene, p, hx, hy)

        if sample_energy:
            ue = _electric_energy(scene, ex, ey, ez, sl, eps_edges)
            uh = 0.5 * MU0 * dv * (
                float(np.sum(hx_prev[sl["hx"]] * hx[sl["hx"]]))
                + float(np.sum(hy_prev[sl["hy"]] * hy[sl["hy"]]))
                + float(np.sum(hz_prev[sl["hz"]] * hz[sl["hz"]]))
            )
            energy_steps.append(n + 1)
            energies.append(ue + uh)

        if not np.isfinite(v_rec[:, n]).all():
            raise NumericalInstabilityError(n, "port voltage")
        if check_finite_every and (n + 1) % check_finite_every == 0:
            if not (np.isfinite(ez).all() and np.isfinite(hx).all()):
                raise NumericalInstabilityError(n, "field array")

        win_acc += float(np.sum(v_rec[:, n] ** 2))
        if (n + 1) % stop_window == 0:
            win_sums.append(win_acc)
            win_acc = 0.0
            if early_stop and (n + 1) * dt > extinct_t + stop_window * dt:
                peak = max(win_sums)
                if peak > 0.0 and win_sums[-1] <= stop_energy_ratio * peak:
                    steps_done = n + 1
                    break

    ts = TimeSeries(
        dt=dt,
        v=v_rec[:, :steps_done].copy(),
        i=i_rec[:, :steps_done].copy(),
        source_v=s_rec[:steps_done].copy(),
        active_port=active_port,
        z0=tuple(p.z0 for p in scene.ports),
        rs=tuple(p.rs for p in scene.ports),
        pulse=pulse,
        energy_steps=np.asarray(energy_steps, dtype=np.int64),
        energy=np.asarray(energies, dtype=float),
        meta={"steps": steps_done, "max_steps": max_steps,
              "lattice": scene.shape_cells},
    )
    return ts
