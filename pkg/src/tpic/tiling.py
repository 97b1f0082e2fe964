"""
Tile decomposition and the bookmark-array particle container.

All particles of a species live in one contiguous structure-of-arrays.
``tile_offset[t]:tile_offset[t+1]`` is the section owned by tile ``t``.
After a push only a few particles leave their tile, so re-sorting moves just
the out-of-place ones (an almost-sorted bucket sort):

1. count particles per destination tile, prefix-sum into new offsets;
2. register every slot of a new section that holds a foreign particle as a
   hole (``target_idx`` of the section's tile);
3. register every particle sitting outside its new section as an entering
   particle (``source_idx`` of its tile);
4. per tile the two lists have equal length;
5. copy sources into holes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import Particles


@dataclass
class TileMap:
    particles: Particles
    tile_offset: np.ndarray
    tiles_x: int
    tiles_y: int
    tile_nx: int
    tile_ny: int

    @property
    def n_tiles(self) -> int:
        return self.tiles_x * self.tiles_y

    @property
    def nx(self) -> int:
        return self.tiles_x * self.tile_nx

    @property
    def ny(self) -> int:
        return self.tiles_y * self.tile_ny

    @classmethod
    def from_particles(cls, particles: Particles, tiles_x: int, tiles_y: int,
                       tile_nx: int, tile_ny: int) -> "TileMap":
        """Build a sorted map from particles in arbitrary order (stable)."""
        tm = cls(particles, np.zeros(tiles_x * tiles_y + 1, dtype=np.int64),
                 tiles_x, tiles_y, tile_nx, tile_ny)
        ids = tile_ids(tm)
        order = np.argsort(ids, kind="stable")
        tm.particles = particles.take(order)
        counts = np.bincount(ids, minlength=tm.n_tiles)
        tm.tile_offset[1:] = np.cumsum(counts)
        return tm

    def section(self, t: int) -> slice:
        return slice(int(self.tile_offset[t]), int(self.tile_offset[t + 1]))

    def tile_origin(self, t: int) -> tuple[int, int]:
        return (t % self.tiles_x) * self.tile_nx, (t // self.tiles_x) * self.tile_ny


@dataclass
class MoveBuffers:
    """Per-tile index lists stored flat with offsets (CSR layout)."""

    target_idx: np.ndarray
    target_offset: np.ndarray
    source_idx: np.ndarray | None = None
    source_offset: np.ndarray | None = None

    def targets(self, t: int) -> np.ndarray:
        return self.target_idx[self.target_offset[t]:self.target_offset[t + 1]]

    def sources(self, t: int) -> np.ndarray:
        return self.source_idx[self.source_offset[t]:self.source_offset[t + 1]]

    def __len__(self) -> int:
        return len(self.target_idx)


def tile_of(ix: int, iy: int, tm: TileMap) -> int:
    if not (0 <= ix < tm.nx and 0 <= iy < tm.ny):
        raise IndexError(f"cell ({ix}, {iy}) is outside the {tm.nx}x{tm.ny} grid")
    return (iy // tm.tile_ny) * tm.tiles_x + ix // tm.tile_nx


@numba.njit(cache=True, nogil=True)
def _tile_ids(ix, iy, tile_nx, tile_ny, tiles_x, nx, ny):
    out = np.empty(len(ix), dtype=np.int64)
    for k in range(len(ix)):
        i = ix[k]
        j = iy[k]
        if i < 0 or i >= nx or j < 0 or j >= ny:
            return out, k
        out[k] = (j // tile_ny) * tiles_x + i // tile_nx
    return out, -1


def tile_ids(tm: TileMap) -> np.ndarray:
    p = tm.particles
    ids, bad = _tile_ids(p.ix, p.iy, tm.tile_nx, tm.tile_ny, tm.tiles_x, tm.nx, tm.ny)
    if bad >= 0:
        raise IndexError(f"particle {bad} at cell ({p.ix[bad]}, {p.iy[bad]}) "
                         f"is outside the {tm.nx}x{tm.ny} grid")
    return ids


def count_and_prefix(tm: TileMap, ids: np.ndarray | None = None) -> np.ndarray:
    """New bookmark array for the particles' current tile membership."""
    if ids is None:
        ids = tile_ids(tm)
    offset = np.zeros(tm.n_tiles + 1, dtype=np.int64)
    np.cumsum(np.bincount(ids, minlength=tm.n_tiles), out=offset[1:])
    return offset


@numba.njit(cache=True, nogil=True)
def _register_leaving(ids, new_offset):
    n_tiles = len(new_offset) - 1
    counts = np.zeros(n_tiles + 1, dtype=np.int64)
    for t in range(n_tiles):
        for k in range(new_offset[t], new_offset[t + 1]):
            if ids[k] != t:
                counts[t + 1] += 1
    off = np.cumsum(counts)
    idx = np.empty(off[-1], dtype=np.int64)
    fill = off[:-1].copy()
    for t in range(n_tiles):
        for k in range(new_offset[t], new_offset[t + 1]):
            if ids[k] != t:
                idx[fill[t]] = k
                fill[t] += 1
    return idx, off


@numba.njit(cache=True, nogil=True)
def _register_entering(ids, new_offset):
    n_tiles = len(new_offset) - 1
    counts = np.zeros(n_tiles + 1, dtype=np.int64)
    for k in range(len(ids)):
        t = ids[k]
        if k < new_offset[t] or k >= new_offset[t + 1]:
            counts[t + 1] += 1
    off = np.cumsum(counts)
    idx = np.empty(off[-1], dtype=np.int64)
    fill = off[:-1].copy()
    for k in range(len(ids)):
        t = ids[k]
        if k < new_offset[t] or k >= new_offset[t + 1]:
            idx[fill[t]] = k
            fill[t] += 1
    return idx, off


def register_leaving(tm: TileMap, new_offset: np.ndarray,
                     ids: np.ndarray | None = None) -> MoveBuffers:
    """Holes: slots of each new section occupied by a particle of another tile.

    This catches particles that left their tile as well as those merely
    sitting in a slot that a growing neighbour section has absorbed.
    """
    if ids is None:
        ids = tile_ids(tm)
    idx, off = _register_leaving(ids, new_offset)
    return MoveBuffers(idx, off)


def register_entering(tm: TileMap, new_offset: np.ndarray, buffers: MoveBuffers,
                      ids: np.ndarray | None = None) -> MoveBuffers:
    """Record, per destination tile, the particles found outside its section."""
    if ids is None:
        ids = tile_ids(tm)
    buffers.source_idx, buffers.source_offset = _register_entering(ids, new_offset)
    if not np.array_equal(buffers.source_offset, buffers.target_offset):
        bad = np.flatnonzero(np.diff(buffers.source_offset) != np.diff(buffers.target_offset))
        raise RuntimeError(f"unbalanced move buffers for tiles {bad[:10].tolist()}")
    return buffers


def apply_moves(tm: TileMap, buffers: MoveBuffers, new_offset: np.ndarray | None = None) -> int:
    """Copy every registered particle into a hole of its tile; returns the copy count."""
    src, dst = buffers.source_idx, buffers.target_idx
    if len(src):
        for a in tm.particles.arrays():
            a[dst] = a[src]
    if new_offset is not None:
        tm.tile_offset = new_offset
    return len(src)


def sort_tiles(tm: TileMap) -> int:
    """Restore strict tile order in place; returns the number of particles copied."""
    ids = tile_ids(tm)
    new_offset = count_and_prefix(tm, ids)
    buffers = register_leaving(tm, new_offset, ids)
    register_entering(tm, new_offset, buffers, ids)
    return apply_moves(tm, buffers, new_offset)
