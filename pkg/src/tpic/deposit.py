"""
Charge-conserving current deposition (Villasenor-Buneman).

A particle is a uniform unit square of charge. Within one cell the charge
crossing each staggered face is linear in the displacement and evaluated at
the midpoint of the motion; a step that leaves the cell is cut at every face
it crosses so each piece stays inside one cell.

Coordinates are in cell units. For the cell ``(ix, iy)`` the fluxes land on
``Jx[ix, iy]``, ``Jx[ix, iy+1]``, ``Jy[ix, iy]`` and ``Jy[ix+1, iy]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .pusher import CourantError


@dataclass(frozen=True)
class Segment:
    """Straight piece of a particle step, confined to cell ``(ix, iy)``.

    ``frac`` is the share of the whole step's duration spent on this piece.
    """

    ix: int
    iy: int
    x0: float
    y0: float
    x1: float
    y1: float
    frac: float = 1.0


@numba.njit(cache=True, nogil=True)
def _split(x0, y0, x1, y1, out):
    """Cut the path (x0, y0) -> (x1, y1) at cell faces.

    Fills rows of ``out`` with ``(cell dx, cell dy, xs, ys, xe, ye, frac)``
    and returns the number of segments, or -1 if the end point lies beyond
    the neighbouring cells.
    """
    if x1 <= -1.0 or x1 >= 2.0 or y1 <= -1.0 or y1 >= 2.0:
        return -1
    sx = 0
    sy = 0
    fx = 0.0
    fy = 0.0
    if x1 < 0.0:
        sx = -1
    elif x1 > 1.0:
        sx = 1
        fx = 1.0
    if y1 < 0.0:
        sy = -1
    elif y1 > 1.0:
        sy = 1
        fy = 1.0

    if sx == 0 and sy == 0:
        out[0, 0] = 0.0
        out[0, 1] = 0.0
        out[0, 2] = x0
        out[0, 3] = y0
        out[0, 4] = x1
        out[0, 5] = y1
        out[0, 6] = 1.0
        return 1

    if sy == 0:
        t = (fx - x0) / (x1 - x0)
        yc = y0 + t * (y1 - y0)
        out[0, 0] = 0.0
        out[0, 1] = 0.0
        out[0, 2] = x0
        out[0, 3] = y0
        out[0, 4] = fx
        out[0, 5] = yc
        out[0, 6] = t
        out[1, 0] = sx
        out[1, 1] = 0.0
        out[1, 2] = fx - sx
        out[1, 3] = yc
        out[1, 4] = x1 - sx
        out[1, 5] = y1
        out[1, 6] = 1.0 - t
        return 2

    if sx == 0:
        t = (fy - y0) / (y1 - y0)
        xc = x0 + t * (x1 - x0)
        out[0, 0] = 0.0
        out[0, 1] = 0.0
        out[0, 2] = x0
        out[0, 3] = y0
        out[0, 4] = xc
        out[0, 5] = fy
        out[0, 6] = t
        out[1, 0] = 0.0
        out[1, 1] = sy
        out[1, 2] = xc
        out[1, 3] = fy - sy
        out[1, 4] = x1
        out[1, 5] = y1 - sy
        out[1, 6] = 1.0 - t
        return 2

    tx = (fx - x0) / (x1 - x0)
    ty = (fy - y0) / (y1 - y0)
    if tx <= ty:
        ya = y0 + tx * (y1 - y0)
        xb = x0 + ty * (x1 - x0) - sx
        out[0, 0] = 0.0
        out[0, 1] = 0.0
        out[0, 2] = x0
        out[0, 3] = y0
        out[0, 4] = fx
        out[0, 5] = ya
        out[0, 6] = tx
        out[1, 0] = sx
        out[1, 1] = 0.0
        out[1, 2] = fx - sx
        out[1, 3] = ya
        out[1, 4] = xb
        out[1, 5] = fy
        out[1, 6] = ty - tx
        out[2, 0] = sx
        out[2, 1] = sy
        out[2, 2] = xb
        out[2, 3] = fy - sy
        out[2, 4] = x1 - sx
        out[2, 5] = y1 - sy
        out[2, 6] = 1.0 - ty
    else:
        xa = x0 + ty * (x1 - x0)
        yb = y0 + tx * (y1 - y0) - sy
        out[0, 0] = 0.0
        out[0, 1] = 0.0
        out[0, 2] = x0
        out[0, 3] = y0
        out[0, 4] = xa
        out[0, 5] = fy
        out[0, 6] = ty
        out[1, 0] = 0.0
        out[1, 1] = sy
        out[1, 2] = xa
        out[1, 3] = fy - sy
        out[1, 4] = fx
        out[1, 5] = yb
        out[1, 6] = tx - ty
        out[2, 0] = sx
        out[2, 1] = sy
        out[2, 2] = fx - sx
        out[2, 3] = yb
        out[2, 4] = x1 - sx
        out[2, 5] = y1 - sy
        out[2, 6] = 1.0 - tx
    return 3


@numba.njit(cache=True, nogil=True)
def _deposit_segment(J, ci, cj, xs, ys, xe, ye, frac, qnx, qny, qvz):
    # (ci, cj): array index of the segment's cell in J
    ddx = xe - xs
    ddy = ye - ys
    xm = xs + 0.5 * ddx
    ym = ys + 0.5 * ddy
    J[0, ci, cj] += qnx * ddx * (1.0 - ym)
    J[0, ci, cj + 1] += qnx * ddx * ym
    J[1, ci, cj] += qny * ddy * (1.0 - xm)
    J[1, ci + 1, cj] += qny * ddy * xm
    w = qvz * frac
    J[2, ci, cj] += w * (1.0 - xm) * (1.0 - ym)
    J[2, ci + 1, cj] += w * xm * (1.0 - ym)
    J[2, ci, cj + 1] += w * (1.0 - xm) * ym
    J[2, ci + 1, cj + 1] += w * xm * ym


@numba.njit(cache=True, nogil=True)
def _deposit_current(J, ci, cj, x0, y0, x1, y1, qnx, qny, qvz, segs):
    n = _split(x0, y0, x1, y1, segs)
    for k in range(n):
        _deposit_segment(J, ci + int(segs[k, 0]), cj + int(segs[k, 1]),
                         segs[k, 2], segs[k, 3], segs[k, 4], segs[k, 5], segs[k, 6],
                         qnx, qny, qvz)
    return n


def split_trajectory(old, new) -> list[Segment]:
    """Split a step into 1 to 3 single-cell segments.

    ``old`` is ``(ix, iy, x, y)``; ``new`` is the end point either as
    ``(ix, iy, x, y)`` with unwrapped cell indices or as ``(x, y)`` in the
    frame of the old cell.
    """
    ix, iy, x0, y0 = old
    if len(new) == 4:
        x1 = new[2] + (new[0] - ix)
        y1 = new[3] + (new[1] - iy)
    else:
        x1, y1 = new
    out = np.empty((3, 7))
    n = _split(float(x0), float(y0), float(x1), float(y1), out)
    if n < 0:
        raise CourantError(f"step from ({x0}, {y0}) to ({x1}, {y1}) ends beyond the next cell")
    return [Segment(ix + int(r[0]), iy + int(r[1]), *map(float, r[2:])) for r in out[:n]]


def deposit_segment(seg: Segment, q: float, u_z_over_gamma: float, dt: float, J: np.ndarray,
                    offset: int = 0, dx: float = 1.0, dy: float = 1.0) -> None:
    """Accumulate one segment's current into the buffer ``J`` (3, mx, my).

    Cell ``(0, 0)`` of the buffer is at array index ``(offset, offset)``.
    """
    _deposit_segment(J, seg.ix + offset, seg.iy + offset, seg.x0, seg.y0, seg.x1, seg.y1,
                     seg.frac, q * dx / dt, q * dy / dt, q * u_z_over_gamma)


def deposit_current(old, new, u, q: float, dt: float, J: np.ndarray,
                    offset: int = 0, dx: float = 1.0, dy: float = 1.0) -> int:
    """Deposit the current of a whole particle step; returns the segment count."""
    segs = split_trajectory(old, new)
    ux, uy, uz = u
    vz = uz / math.sqrt(1.0 + ux * ux + uy * uy + uz * uz)
    for s in segs:
        deposit_segment(s, q, vz, dt, J, offset, dx, dy)
    return len(segs)
