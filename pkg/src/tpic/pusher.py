"""
Field interpolation and the relativistic Boris push.

The ``_``-prefixed functions are numba kernels shared with the tile engine;
the public functions wrap them for single particles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import Particle, Vec3

# (x, y) half-cell offsets of each component, see fields.py
E_STAGGER = ((1, 0), (0, 1), (0, 0))
B_STAGGER = ((0, 1), (1, 0), (1, 1))


class CourantError(RuntimeError):
    """A particle tried to move more than one cell along an axis in one step."""


@dataclass(frozen=True)
class InterpolatedField:
    Ep: Vec3
    Bp: Vec3


@numba.njit(cache=True, nogil=True)
def _interp(F, c, sx, sy, ci, cj, x, y):
    # (ci, cj) is the array index of the particle's cell
    if sx:
        if x < 0.5:
            fx = x + 0.5
            i = ci - 1
        else:
            fx = x - 0.5
            i = ci
    else:
        fx = x
        i = ci
    if sy:
        if y < 0.5:
            fy = y + 0.5
            j = cj - 1
        else:
            fy = y - 0.5
            j = cj
    else:
        fy = y
        j = cj
    return ((1.0 - fx) * ((1.0 - fy) * F[c, i, j] + fy * F[c, i, j + 1])
            + fx * ((1.0 - fy) * F[c, i + 1, j] + fy * F[c, i + 1, j + 1]))


@numba.njit(cache=True, nogil=True)
def _interp_emf(E, B, ci, cj, x, y):
    return (_interp(E, 0, 1, 0, ci, cj, x, y),
            _interp(E, 1, 0, 1, ci, cj, x, y),
            _interp(E, 2, 0, 0, ci, cj, x, y),
            _interp(B, 0, 0, 1, ci, cj, x, y),
            _interp(B, 1, 1, 0, ci, cj, x, y),
            _interp(B, 2, 1, 1, ci, cj, x, y))


@numba.njit(cache=True, nogil=True)
def _boris(ux, uy, uz, ex, ey, ez, bx, by, bz, q_over_m, dt):
    tem = 0.5 * dt * q_over_m
    # half electric kick
    ux += tem * ex
    uy += tem * ey
    uz += tem * ez
    # magnetic rotation
    gtem = tem / math.sqrt(1.0 + ux * ux + uy * uy + uz * uz)
    nx = gtem * bx
    ny = gtem * by
    nz = gtem * bz
    vx = ux + (uy * nz - uz * ny)
    vy = uy + (uz * nx - ux * nz)
    vz = uz + (ux * ny - uy * nx)
    s = 2.0 / (1.0 + nx * nx + ny * ny + nz * nz)
    sx = s * nx
    sy = s * ny
    sz = s * nz
    ux += vy * sz - vz * sy
    uy += vz * sx - vx * sz
    uz += vx * sy - vy * sx
    # second half electric kick
    return ux + tem * ex, uy + tem * ey, uz + tem * ez


@numba.njit(cache=True, nogil=True)
def _displacement(ux, uy, uz, dt, dx, dy):
    rg = 1.0 / math.sqrt(1.0 + ux * ux + uy * uy + uz * uz)
    return ux * rg * dt / dx, uy * rg * dt / dy


@numba.njit(cache=True, nogil=True)
def _renormalize(x):
    """Split an unwrapped in-cell coordinate into (carry, offset in [0, 1))."""
    carry = math.floor(x)
    f = x - carry
    if f >= 1.0:
        # x was a tiny negative number; the half-open convention puts it at 0
        f = 0.0
        carry += 1.0
    return int(carry), f


def _check_view(F: np.ndarray, ci: int, cj: int) -> None:
    if ci < 1 or cj < 1 or ci + 1 >= F.shape[1] or cj + 1 >= F.shape[2]:
        raise IndexError(f"interpolation stencil around array cell ({ci}, {cj}) "
                         f"leaves the field view of shape {F.shape[1:]}")


def interpolate_emf(p: Particle, E: np.ndarray, B: np.ndarray, offset: int = 0) -> InterpolatedField:
    """Fields at the particle position by per-component bilinear weights.

    ``E`` and ``B`` are ``(3, mx, my)`` views whose cell ``(0, 0)`` sits at
    array index ``(offset, offset)``.
    """
    ci, cj = p.ix + offset, p.iy + offset
    _check_view(E, ci, cj)
    _check_view(B, ci, cj)
    v = _interp_emf(E, B, ci, cj, p.x, p.y)
    return InterpolatedField(Vec3(*v[:3]), Vec3(*v[3:]))


def advance_momentum(u, f: InterpolatedField, q_over_m: float, dt: float) -> Vec3:
    """Boris update of the generalized velocity ``u`` over one step."""
    return Vec3(*_boris(*map(float, u), *f.Ep, *f.Bp, q_over_m, dt))


def push_position(p: Particle, dt: float, dx: float = 1.0, dy: float = 1.0):
    """Move ``p`` with its (already advanced) velocity.

    Returns the moved particle and the signed cell crossings ``(cx, cy)``.
    Cell indices are not wrapped here.
    """
    ddx, ddy = _displacement(*p.u, dt, dx, dy)
    if abs(ddx) >= 1.0 or abs(ddy) >= 1.0:
        raise CourantError(f"particle moved ({ddx:.3g}, {ddy:.3g}) cells in one step")
    cx, x = _renormalize(p.x + ddx)
    cy, y = _renormalize(p.y + ddy)
    return Particle(p.ix + cx, p.iy + cy, x, y, p.u), (cx, cy)
