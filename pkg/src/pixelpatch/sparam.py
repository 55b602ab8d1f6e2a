"""Two-port scattering parameters: spectral extraction from recorded port
waveforms, dB and resonance utilities, physical sanity checks, and
Touchstone v1 (.s2p) interchange."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SParamSet",
    "SanityReport",
    "DecayError",
    "TouchstoneParseError",
    "db_mag",
    "default_band",
    "extract_sparams",
    "resonance_min",
    "sanity_check",
    "touchstone_read",
    "touchstone_write",
]

DB_FLOOR = -200.0   # reported for exactly zero magnitude

PASSIVITY_LIMIT_LOSSLESS = 1.02
PASSIVITY_LIMIT_LOSSY = 1.0 + 1e-3
RECIPROCITY_LIMIT = 0.02


class DecayError(RuntimeError):
    """Port signals had not decayed enough for trustworthy spectra."""


class TouchstoneParseError(ValueError):
    """Malformed .s2p content; ``line`` is the 1-based offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def default_band(nfreq: int = 251) -> np.ndarray:
    """Default analysis sweep: 3-8 GHz, linear, inclusive endpoints."""
    return np.linspace(3e9, 8e9, nfreq)


def db_mag(s) -> float:
    """20 log10 |s|, floored at -200 dB so reports stay finite."""
    mag = abs(s)
    if mag == 0.0:
        return DB_FLOOR
    return max(20.0 * math.log10(mag), DB_FLOOR)


@dataclass(frozen=True)
class SParamSet:
    """Frequency-sampled 2x2 scattering matrix at reference impedance z0."""

    freqs: np.ndarray          # (nf,) strictly ascending, Hz
    s: np.ndarray              # (nf, 2, 2) complex
    z0: float = 50.0

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        s = np.asarray(self.s, dtype=complex)
        if freqs.ndim != 1 or freqs.size == 0:
            raise ValueError("freqs must be a non-empty 1-D array")
        if not (np.diff(freqs) > 0).all():
            raise ValueError("freqs must be strictly ascending")
        if s.shape != (freqs.size, 2, 2):
            raise ValueError(f"expected s shape {(freqs.size, 2, 2)}, got {s.shape}")
        if self.z0 <= 0:
            raise ValueError(f"z0 must be > 0, got {self.z0}")
        freqs.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "s", s)

    @property
    def nfreq(self) -> int:
        return self.freqs.size

    def covers(self, f: float) -> bool:
        return bool(self.freqs[0] <= f <= self.freqs[-1])

    def s_at(self, f: float) -> np.ndarray:
        """2x2 matrix at ``f`` by linear interpolation of the complex entries."""
        if not self.covers(f):
            raise ValueError(f"{f} Hz outside the sweep "
                             f"[{self.freqs[0]}, {self.freqs[-1]}] Hz")
        out = np.empty((2, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                out[a, b] = np.interp(f, self.freqs, self.s[:, a, b].real) \
                    + 1j * np.interp(f, self.freqs, self.s[:, a, b].imag)
        return out

    def s11_db_at(self, f: float) -> float:
        return db_mag(self.s_at(f)[0, 0])

    def s21_db_at(self, f: float) -> float:
        return db_mag(self.s_at(f)[1, 0])


def resonance_min(sset: SParamSet, port: int = 1) -> tuple[float, float]:
    """Frequency of minimum |S_pp| and its dB value; ties take the lowest
    frequency."""
    if port not in (1, 2):
        raise ValueError(f"port must be 1 or 2, got {port}")
    mags = np.abs(sset.s[:, port - 1, port - 1])
    k = int(np.argmin(mags))   # argmin returns the first minimum on ties
    return float(sset.freqs[k]), db_mag(mags[k])


@dataclass(frozen=True)
class SanityReport:
    """Passivity / reciprocity figures with their pass thresholds."""

    max_passivity: float        # max over f of |S11|^2 + |S21|^2
    max_reciprocity_err: float  # max over f of |S21 - S12|
    passivity_limit: float
    reciprocity_limit: float = RECIPROCITY_LIMIT

    @property
    def passivity_ok(self) -> bool:
        return self.max_passivity <= self.passivity_limit

    @property
    def reciprocity_ok(self) -> bool:
        return self.max_reciprocity_err <= self.reciprocity_limit

    @property
    def ok(self) -> bool:
        return self.passivity_ok and self.reciprocity_ok

    def summary(self) -> str:
        return (f"passivity max {self.max_passivity:.4f} "
                f"(limit {self.passivity_limit:.4f}) "
                f"{'ok' if self.passivity_ok else 'VIOLATION'}; "
                f"reciprocity max {self.max_reciprocity_err:.4f} "
                f"(limit {self.reciprocity_limit:.4f}) "
                f"{'ok' if self.reciprocity_ok else 'VIOLATION'}")


def sanity_check(sset: SParamSet, lossless: bool = True) -> SanityReport:
    """Passivity and reciprocity figures of a two-port set.

    A small passivity excess is tolerated on lossless scenes (numerical
    dispersion); lossy scenes must stay essentially below unity.
    """
    p = np.abs(sset.s[:, 0, 0]) ** 2 + np.abs(sset.s[:, 1, 0]) ** 2
    r = np.abs(sset.s[:, 1, 0] - sset.s[:, 0, 1])
    return SanityReport(
        max_passivity=float(p.max()),
        max_reciprocity_err=float(r.max()),
        passivity_limit=PASSIVITY_LIMIT_LOSSLESS if lossless else PASSIVITY_LIMIT_LOSSY,
    )


# ---------------------------------------------------------------------------
# spectral extraction
# ---------------------------------------------------------------------------

def _dft(x: np.ndarray, offset: float, freqs: np.ndarray, dt: float) -> np.ndarray:
    """Continuous-spectrum estimate sum(x[n] exp(-j2pif(n+offset)dt)) dt,
    evaluated exactly at the requested frequencies (equivalent to unlimited
    zero padding). Chunked to bound the phase-matrix memory."""
    n = np.arange(x.size) + offset
    out = np.empty(freqs.size, dtype=complex)
    step = 64
    for a in range(0, freqs.size, step):
        fs = freqs[a:a + step]
        phase = np.exp(-2j * np.pi * np.outer(fs, n) * dt)
        out[a:a + step] = phase @ x
    return out * dt


def extract_sparams(runs, band: tuple[float, float] = (3e9, 8e9),
                    nfreq: int = 251, *, symmetric: bool = False,
                    decay_tol: float = 1e-6) -> SParamSet:
    """Port waveform records -> two-port S-parameters over ``band``.

    ``runs`` holds one record per excited port, in port order. With
    ``symmetric=True`` a single port-1 record of a mirror-symmetric scene
    suffices; the second column is filled by the port-swap symmetry
    (S22=S11, S12=S21), which is exact for such scenes.

    Wave quantities follow a = (V + Z0 I)/(2 sqrt(Z0)) and
    b = (V - Z0 I)/(2 sqrt(Z0)) from the recorded gap voltages and loop
    currents; S_ij = b_i / a_j. For the excited port and Rs = Z0 the
    incident wave equals the source prediction Vs/(2 sqrt(Z0)) up to the
    port cell's local reactance; the measured form is used because it keeps
    the extracted network exactly passive on lossless scenes.
    """
    runs = list(runs)
    fmin, fmax = float(band[0]), float(band[1])
    if not 0 < fmin < fmax:
        raise ValueError(f"bad band {band}")
    if nfreq < 2:
        raise ValueError(f"nfreq must be >= 2, got {nfreq}")
    if symmetric:
        if len(runs) != 1 or runs[0].active_port != 1:
            raise ValueError("symmetric extraction needs exactly one port-1 run")
        expected_ports = [1]
    else:
        expected_ports = [1, 2]
        if [r.active_port for r in runs] != expected_ports:
            raise ValueError("need one run per port, in port order "
                             f"(got active ports {[r.active_port for r in runs]})")

    dt = runs[0].dt
    z0 = runs[0].z0[0]
    for r in runs:
        if r.dt != dt:
            raise ValueError("runs have differing time steps")
        if r.nports != 2:
            raise ValueError("two-port extraction needs two recorded ports")
        if any(z != z0 for z in r.z0):
            raise ValueError("ports have differing reference impedances")
        if not r.pulse.covers_band(fmin, fmax):
            raise ValueError(f"band {band} outside the source's -20 dB spectrum")
        ratio = r.trailing_energy_ratio()
        if ratio > decay_tol:
            raise DecayError(
                f"port signals not decayed: trailing/peak window energy "
                f"{ratio:.3e} > {decay_tol:.1e}; raise max_steps")

    freqs = np.linspace(fmin, fmax, nfreq)
    s = np.empty((nfreq, 2, 2), dtype=complex)
    root = 2.0 * math.sqrt(z0)
    for r in runs:
        j = r.active_port - 1
        vj = _dft(r.v[j], 1.0, freqs, dt)
        ij = _dft(r.i[j], 1.5, freqs, dt)
        a_j = (vj + z0 * ij) / root
        for p in range(2):
            v_f = _dft(r.v[p], 1.0, freqs, dt)
            i_f = _dft(r.i[p], 1.5, freqs, dt)
            b_p = (v_f - z0 * i_f) / root
            s[:, p, j] = b_p / a_j
    if symmetric:
        s[:, 1, 1] = s[:, 0, 0]
        s[:, 0, 1] = s[:, 1, 0]
    return SParamSet(freqs, s, z0)


# ---------------------------------------------------------------------------
# Touchstone v1 two-port files
# ---------------------------------------------------------------------------

_UNIT_SCALE = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def touchstone_write(sset: SParamSet, path) -> None:
    """Write a version-1 .s2p: option line then one row per frequency of
    f, Re/Im S11, S21, S12, S22 with 9 significant digits."""
    with open(path, "w") as fh:
        fh.write(f"# HZ S RI R {sset.z0:g}\n")
        for k in range(sset.nfreq):
            m = sset.s[k]
            vals = (sset.freqs[k],
                    m[0, 0].real, m[0, 0].imag, m[1, 0].real, m[1, 0].imag,
                    m[0, 1].real, m[0, 1].imag, m[1, 1].real, m[1, 1].imag)
            fh.write(" ".join(f"{x:.8e}" for x in vals) + "\n")


def _parse_option_line(line_no: int, tokens: list[str]) -> tuple[float, float]:
    unit_scale = _UNIT_SCALE["GHZ"]
    par = "S"
    fmt = "MA"
    z0 = 50.0
    k = 0
    seen_unit = False
    while k < len(tokens):
        t = tokens[k].upper()
        if t in _UNIT_SCALE:
            if seen_unit:
                raise TouchstoneParseError(line_no, "duplicate frequency unit")
            unit_scale = _UNIT_SCALE[t]
            seen_unit = True
        elif t in ("S", "Y", "Z", "G", "H"):
            par = t
        elif t in ("RI", "MA", "DB"):
            fmt = t
        elif t == "R":
            if k + 1 >= len(tokens):
                raise TouchstoneParseError(line_no, "option 'R' missing impedance value")
            try:
                z0 = float(tokens[k + 1])
            except ValueError:
                raise TouchstoneParseError(
                    line_no, f"bad reference impedance {tokens[k + 1]!r}") from None
            k += 1
        else:
            raise TouchstoneParseError(line_no, f"unknown option token {tokens[k]!r}")
        k += 1
    if par != "S":
        raise TouchstoneParseError(line_no, f"unsupported parameter type {par!r} (need S)")
    if fmt != "RI":
        raise TouchstoneParseError(line_no, f"unsupported data format {fmt!r} (need RI)")
    if z0 <= 0:
        raise TouchstoneParseError(line_no, f"reference impedance must be > 0, got {z0}")
    return unit_scale, z0


def touchstone_read(path) -> SParamSet:
    """Inverse of :func:`touchstone_write`; also accepts the other v1
    frequency units. Comments start with '!'."""
    freqs: list[float] = []
    rows: list[np.ndarray] = []
    scale = None
    z0 = 50.0
    last_line = 0
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            last_line = line_no
            line = raw.split("!", 1)[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                if scale is not None:
                    raise TouchstoneParseError(line_no, "duplicate option line")
                scale, z0 = _parse_option_line(line_no, line[1:].split())
                continue
            if scale is None:
                raise TouchstoneParseError(line_no, "data before option line")
            tokens = line.split()
            if len(tokens) != 9:
                raise TouchstoneParseError(
                    line_no, f"expected 9 columns, got {len(tokens)}")
            try:
                vals = [float(t) for t in tokens]
            except ValueError:
                raise TouchstoneParseError(line_no, f"non-numeric value in {line!r}") from None
            f = vals[0] * scale
            if freqs and f <= freqs[-1]:
                raise TouchstoneParseError(
                    line_no, f"frequencies must be strictly ascending ({f} Hz)")
            freqs.append(f)
            m = np.array([[vals[1] + 1j * vals[2], vals[5] + 1j * vals[6]],
                          [vals[3] + 1j * vals[4], vals[7] + 1j * vals[8]]])
            rows.append(m)
    if scale is None:
        raise TouchstoneParseError(max(last_line, 1), "missing option line")
    if not rows:
        raise TouchstoneParseError(last_line, "no data rows")
    return SParamSet(np.asarray(freqs), np.stack(rows), z0)
