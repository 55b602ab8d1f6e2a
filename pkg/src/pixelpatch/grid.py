"""Binary pixel grids for patch metallization.

A patch is an ``nx`` by ``ny`` field of square metal pixels. Bits are stored
row-major, ``bits[iy * nx + ix]``, with (ix=0, iy=0) at the patch corner
nearest the feed line; row iy=0 is the edge the feed attaches to.

Electrical connectivity is 4-neighborhood only: pixels touching just at a
corner do not count as connected (a diagonal point contact is not a reliable
conductor). Repair deletes every active pixel not 4-connected to the feed
cell, and always forces the feed cell itself active, so a repaired grid is a
single fed conductor with no floating islands.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PixelGrid",
    "make_grid",
    "connected_component",
    "repair_floating",
    "is_repaired",
    "random_grid",
    "hamming",
    "write_mask",
    "read_mask",
    "mask_to_text",
    "mask_from_text",
    "pack_bits_hex",
    "unpack_bits_hex",
    "MaskParseError",
]


class MaskParseError(ValueError):
    """Malformed P1 mask text; ``line`` is the offending 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class PixelGrid:
    """Immutable binary occupancy grid for one patch.

    pitch is the pixel edge length in meters; feed is the (ix, iy) cell the
    feed line attaches to.
    """

    nx: int
    ny: int
    bits: np.ndarray
    pitch: float = 1.0e-3
    feed: tuple[int, int] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.nx}x{self.ny}")
        if self.pitch <= 0:
            raise ValueError(f"pitch must be > 0, got {self.pitch}")
        bits = np.ascontiguousarray(np.asarray(self.bits, dtype=np.uint8).ravel())
        if bits.size != self.nx * self.ny:
            raise ValueError(f"expected {self.nx * self.ny} bits, got {bits.size}")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("bits must be 0 or 1")
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)
        feed = self.feed if self.feed is not None else (self.nx // 2, 0)
        fx, fy = int(feed[0]), int(feed[1])
        if not (0 <= fx < self.nx and 0 <= fy < self.ny):
            raise ValueError(f"feed cell {feed} outside {self.nx}x{self.ny} grid")
        object.__setattr__(self, "feed", (fx, fy))

    def __eq__(self, other):
        if not isinstance(other, PixelGrid):
            return NotImplemented
        return (
            self.nx == other.nx
            and self.ny == other.ny
            and self.pitch == other.pitch
            and self.feed == other.feed
            and bool(np.array_equal(self.bits, other.bits))
        )

    def __hash__(self):
        return hash((self.nx, self.ny, self.pitch, self.feed, self.bits.tobytes()))

    def get(self, ix: int, iy: int) -> int:
        return int(self.bits[iy * self.nx + ix])

    def to_matrix(self) -> np.ndarray:
        """Bits as an (ny, nx) array, ``m[iy, ix]``."""
        return self.bits.reshape(self.ny, self.nx).copy()

    def active_count(self) -> int:
        return int(self.bits.sum())

    def with_bits(self, bits) -> "PixelGrid":
        return PixelGrid(self.nx, self.ny, np.asarray(bits), self.pitch, self.feed)

    def bitstring(self) -> str:
        """Row-major 0/1 string; the canonical cache key form."""
        return "".join("1" if b else "0" for b in self.bits)


def make_grid(nx: int, ny: int, fill: int = 0, pitch: float = 1.0e-3,
              feed: tuple[int, int] | None = None) -> PixelGrid:
    """All-``fill`` grid; feed defaults to the bottom-center cell (nx//2, 0)."""
    if fill not in (0, 1):
        raise ValueError(f"fill must be 0 or 1, got {fill}")
    if nx < 1 or ny < 1:
        raise ValueError(f"grid dimensions must be positive, got {nx}x{ny}")
    bits = np.full(nx * ny, fill, dtype=np.uint8)
    return PixelGrid(nx, ny, bits, pitch, feed)


def random_grid(nx: int, ny: int, density: float, seed: int,
                pitch: float = 1.0e-3, feed: tuple[int, int] | None = None) -> PixelGrid:
    """Each bit i.i.d. Bernoulli(density) from a generator seeded by ``seed``."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must be in [0, 1], got {density}")
    rng = np.random.Generator(np.random.PCG64(seed))
    bits = (rng.random(nx * ny) < density).astype(np.uint8)
    return PixelGrid(nx, ny, bits, pitch, feed)


def connected_component(grid: PixelGrid, seed: tuple[int, int]) -> np.ndarray:
    """Active cells reachable from ``seed`` through 4-adjacent active cells.

    Returns a uint8 mask with the same row-major layout as ``grid.bits``.
    All zeros when the seed cell itself is inactive.
    """
    sx, sy = int(seed[0]), int(seed[1])
    if not (0 <= sx < grid.nx and 0 <= sy < grid.ny):
        raise ValueError(f"seed {seed!r} outside {grid.nx}x{grid.ny} grid")
    nx, ny = grid.nx, grid.ny
    mask = np.zeros(nx * ny, dtype=np.uint8)
    if not grid.bits[sy * nx + sx]:
        return mask
    queue = deque([(sx, sy)])
    mask[sy * nx + sx] = 1
    while queue:
        x, y = queue.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            u, v = x + dx, y + dy
            if 0 <= u < nx and 0 <= v < ny:
                idx = v * nx + u
                if grid.bits[idx] and not mask[idx]:
                    mask[idx] = 1
                    queue.append((u, v))
    return mask


def repair_floating(grid: PixelGrid) -> PixelGrid:
    """Keep only the feed-connected component, with the feed cell forced on.

    Deletion-only except for the feed cell: never invents metal the caller
    did not choose, so the result's active set is a subset of the input's
    active set plus the feed cell.
    """
    fx, fy = grid.feed
    fidx = fy * grid.nx + fx
    if grid.bits[fidx]:
        forced = grid
    else:
        bits = grid.bits.copy()
        bits[fidx] = 1
        forced = grid.with_bits(bits)
    return grid.with_bits(connected_component(forced, grid.feed))


def is_repaired(grid: PixelGrid) -> bool:
    """True when every active pixel is 4-connected to the active feed cell."""
    return repair_floating(grid) == grid


def hamming(a: PixelGrid, b: PixelGrid) -> int:
    """Number of differing bits; grids must share the same shape."""
    if (a.nx, a.ny) != (b.nx, b.ny):
        raise ValueError(f"shape mismatch: {a.nx}x{a.ny} vs {b.nx}x{b.ny}")
    return int(np.count_nonzero(a.bits != b.bits))


# ---------------------------------------------------------------------------
# P1 mask text form
#
# Line 1: "P1"; line 2: "nx ny"; then ny lines of nx space-separated 0/1
# digits, row iy=0 first. Lines starting with '#' are skipped on read and
# never written, so a write -> read round trip is bit-exact.
# ---------------------------------------------------------------------------

def mask_to_text(grid: PixelGrid) -> str:
    rows = []
    for iy in range(grid.ny):
        row = grid.bits[iy * grid.nx:(iy + 1) * grid.nx]
        rows.append(" ".join(str(int(b)) for b in row))
    return "P1\n{} {}\n{}\n".format(grid.nx, grid.ny, "\n".join(rows))


def mask_from_text(text: str, pitch: float = 1.0e-3,
                   feed: tuple[int, int] | None = None) -> PixelGrid:
    lines = []  # (1-based line number, content) with comments/blanks dropped
    for n, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        lines.append((n, stripped))
    if not lines:
        raise MaskParseError(1, "empty mask file")
    if lines[0][1] != "P1":
        raise MaskParseError(lines[0][0], f"expected 'P1' header, got {lines[0][1]!r}")
    if len(lines) < 2:
        raise MaskParseError(lines[0][0] + 1, "missing dimensions line")
    dim_no, dim_line = lines[1]
    parts = dim_line.split()
    if len(parts) != 2:
        raise MaskParseError(dim_no, f"expected 'nx ny', got {dim_line!r}")
    try:
        nx, ny = int(parts[0]), int(parts[1])
    except ValueError:
        raise MaskParseError(dim_no, f"non-integer dimensions {dim_line!r}") from None
    if nx < 1 or ny < 1:
        raise MaskParseError(dim_no, f"dimensions must be positive, got {nx} {ny}")
    rows = lines[2:]
    if len(rows) < ny:
        last = rows[-1][0] if rows else dim_no
        raise MaskParseError(last + 1, f"expected {ny} data rows, found {len(rows)}")
    if len(rows) > ny:
        raise MaskParseError(rows[ny][0], f"expected {ny} data rows, found {len(rows)}")
    bits = np.zeros(nx * ny, dtype=np.uint8)
    for iy, (line_no, row) in enumerate(rows):
        tokens = row.split()
        if len(tokens) != nx:
            raise MaskParseError(line_no, f"expected {nx} digits, got {len(tokens)}")
        for ix, tok in enumerate(tokens):
            if tok not in ("0", "1"):
                raise MaskParseError(line_no, f"expected 0 or 1, got {tok!r}")
            bits[iy * nx + ix] = tok == "1"
    return PixelGrid(nx, ny, bits, pitch, feed)


def write_mask(grid: PixelGrid, path) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(mask_to_text(grid))
    except OSError as exc:
        raise OSError(f"cannot write mask {path}: {exc}") from exc


def read_mask(path, pitch: float = 1.0e-3, feed: tuple[int, int] | None = None) -> PixelGrid:
    with open(path) as fh:
        return mask_from_text(fh.read(), pitch, feed)


# ---------------------------------------------------------------------------
# Hex packing used by the optimizer history CSV: each grid row is packed
# little-endian (bit ix=0 in the least significant bit of the row's first
# byte), rows padded independently to a byte boundary and concatenated in
# row-major order, then hex-encoded.
# ---------------------------------------------------------------------------

def pack_bits_hex(grid: PixelGrid) -> str:
    chunks = []
    for iy in range(grid.ny):
        row = grid.bits[iy * grid.nx:(iy + 1) * grid.nx]
        chunks.append(np.packbits(row, bitorder="little").tobytes())
    return b"".join(chunks).hex()


def unpack_bits_hex(hexstr: str, nx: int, ny: int, pitch: float = 1.0e-3,
                    feed: tuple[int, int] | None = None) -> PixelGrid:
    raw = bytes.fromhex(hexstr)
    row_bytes = (nx + 7) // 8
    if len(raw) != row_bytes * ny:
        raise ValueError(f"expected {row_bytes * ny} packed bytes for {nx}x{ny}, got {len(raw)}")
    bits = np.zeros(nx * ny, dtype=np.uint8)
    for iy in range(ny):
        chunk = np.frombuffer(raw[iy * row_bytes:(iy + 1) * row_bytes], dtype=np.uint8)
        bits[iy * nx:(iy + 1) * nx] = np.unpackbits(chunk, bitorder="little")[:nx]
    return PixelGrid(nx, ny, bits, pitch, feed)
