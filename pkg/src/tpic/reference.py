"""
Brute-force oracles for testing.

Nothing here is shared with the production modules: grids are stored without
guard cells and indexed modulo the grid size, interpolation and deposition
weights come from an explicit hat function evaluated over every candidate
grid point, and a trajectory is cut by sorting all of its face crossings.
Only periodic, tile-free simulations are supported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import Particles, SimConfig, SpeciesSpec


@dataclass
class DensityGrid:
    rho: np.ndarray  # (nx, ny), node-centred, guards already folded
    dx: float
    dy: float

    @property
    def total_charge(self) -> float:
        # macro-particle charges are per unit cell area
        return float(self.rho.sum()) * self.dx * self.dy


def _hat(d):
    return np.maximum(0.0, 1.0 - np.abs(d))


def charge_density(particles: Particles, q: float, nx: int, ny: int,
                   dx: float = 1.0, dy: float = 1.0) -> DensityGrid:
    """Each particle spreads ``q`` over nearby nodes with area (hat) weights."""
    rho = np.zeros((nx, ny))
    X = particles.ix + particles.x
    Y = particles.iy + particles.y
    bx = np.floor(X).astype(np.int64)
    by = np.floor(Y).astype(np.int64)
    for a in (-1, 0, 1, 2):
        for b in (-1, 0, 1, 2):
            w = q * _hat(X - (bx + a)) * _hat(Y - (by + b))
            np.add.at(rho, ((bx + a) % nx, (by + b) % ny), w)
    return DensityGrid(rho, dx, dy)


def continuity_residual(J: np.ndarray, rho_before: np.ndarray, rho_after: np.ndarray,
                        dt: float, dx: float = 1.0, dy: float = 1.0) -> float:
    """max |div J + d(rho)/dt| over the (periodic) interior nodes.

    ``J`` is ``(3, nx, ny)``; ``Jx[i]`` sits at ``i + 1/2``, ``Jy[j]`` at ``j + 1/2``.
    """
    div = ((J[0] - np.roll(J[0], 1, axis=0)) / dx
           + (J[1] - np.roll(J[1], 1, axis=1)) / dy)
    return float(np.max(np.abs(div + (rho_after - rho_before) / dt), initial=0.0))


@numba.njit(cache=True)
def _hat1(d):
    d = abs(d)
    return 1.0 - d if d < 1.0 else 0.0


@numba.njit(cache=True)
def _hat_weights(x, y, ix, iy, nx, ny, w, idx):
    """Hat weights of the 3x3 candidate samples around a particle.

    ``w[s, a]`` is the x weight (s = 0, 1 for node / half-node samples) of
    sample column ``ix + a - 1``; ``w[2 + s, b]`` the same along y. ``idx``
    receives the wrapped column / row indices.
    """
    for a in range(3):
        w[0, a] = _hat1(x - (a - 1))
        w[1, a] = _hat1(x - (a - 0.5))
        w[2, a] = _hat1(y - (a - 1))
        w[3, a] = _hat1(y - (a - 0.5))
        idx[0, a] = (ix + a - 1) % nx
        idx[1, a] = (iy + a - 1) % ny


@numba.njit(cache=True)
def _gather(F, c, sx, sy, w, idx):
    # F sample (i, j) sits at (i + sx/2, j + sy/2)
    v = 0.0
    for a in range(3):
        for b in range(3):
            v += w[sx, a] * w[2 + sy, b] * F[c, idx[0, a], idx[1, b]]
    return v


@numba.njit(cache=True)
def _cross(a0, a1, a2, b0, b1, b2):
    return a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0


@numba.njit(cache=True)
def _scatter(J, ix, iy, xa, ya, xb, yb, frac, qnx, qny, qvz, nx, ny):
    # one straight piece inside a single cell, chosen from its midpoint
    xm = 0.5 * (xa + xb)
    ym = 0.5 * (ya + yb)
    cx = int(math.floor(xm))
    cy = int(math.floor(ym))
    lxm = xm - cx
    lym = ym - cy
    i = (ix + cx) % nx
    j = (iy + cy) % ny
    i1 = (i + 1) % nx
    j1 = (j + 1) % ny
    mx = xb - xa
    my = yb - ya
    J[0, i, j] += qnx * mx * _hat1(lym)
    J[0, i, j1] += qnx * mx * _hat1(lym - 1.0)
    J[1, i, j] += qny * my * _hat1(lxm)
    J[1, i1, j] += qny * my * _hat1(lxm - 1.0)
    w = qvz * frac
    J[2, i, j] += w * _hat1(lxm) * _hat1(lym)
    J[2, i1, j] += w * _hat1(lxm - 1.0) * _hat1(lym)
    J[2, i, j1] += w * _hat1(lxm) * _hat1(lym - 1.0)
    J[2, i1, j1] += w * _hat1(lxm - 1.0) * _hat1(lym - 1.0)


@numba.njit(cache=True)
def _naive_deposit(J, ix, iy, x0, y0, x1, y1, qnx, qny, qvz, nx, ny, ts):
    ts[0] = 0.0
    n = 1
    for f in (0.0, 1.0):
        if (x0 - f) * (x1 - f) < 0.0:
            ts[n] = (f - x0) / (x1 - x0)
            n += 1
        if (y0 - f) * (y1 - f) < 0.0:
            ts[n] = (f - y0) / (y1 - y0)
            n += 1
    ts[n] = 1.0
    n += 1
    for k in range(1, n):  # insertion sort, n <= 4
        v = ts[k]
        m = k - 1
        while m >= 0 and ts[m] > v:
            ts[m + 1] = ts[m]
            m -= 1
        ts[m + 1] = v
    for k in range(n - 1):
        ta = ts[k]
        tb = ts[k + 1]
        if tb == ta:
            continue
        xa = x0 + ta * (x1 - x0)
        ya = y0 + ta * (y1 - y0)
        xb = x0 + tb * (x1 - x0) if tb < 1.0 else x1
        yb = y0 + tb * (y1 - y0) if tb < 1.0 else y1
        _scatter(J, ix, iy, xa, ya, xb, yb, tb - ta, qnx, qny, qvz, nx, ny)


@numba.njit(cache=True)
def _naive_particles(ix, iy, x, y, ux, uy, uz, E, B, J, q, q_over_m, dt, dx, dy, nx, ny):
    ts = np.empty(4)
    w = np.empty((4, 3))
    idx = np.empty((2, 3), dtype=np.int64)
    for k in range(len(x)):
        _hat_weights(x[k], y[k], ix[k], iy[k], nx, ny, w, idx)
        ex = _gather(E, 0, 1, 0, w, idx)
        ey = _gather(E, 1, 0, 1, w, idx)
        ez = _gather(E, 2, 0, 0, w, idx)
        bx = _gather(B, 0, 0, 1, w, idx)
        by = _gather(B, 1, 1, 0, w, idx)
        bz = _gather(B, 2, 1, 1, w, idx)

        h = 0.5 * q_over_m * dt
        umx = ux[k] + h * ex
        umy = uy[k] + h * ey
        umz = uz[k] + h * ez
        gm = math.sqrt(1.0 + umx * umx + umy * umy + umz * umz)
        tx = h * bx / gm
        ty = h * by / gm
        tz = h * bz / gm
        cx, cy, cz = _cross(umx, umy, umz, tx, ty, tz)
        upx = umx + cx
        upy = umy + cy
        upz = umz + cz
        f = 2.0 / (1.0 + tx * tx + ty * ty + tz * tz)
        cx, cy, cz = _cross(upx, upy, upz, f * tx, f * ty, f * tz)
        ux[k] = umx + cx + h * ex
        uy[k] = umy + cy + h * ey
        uz[k] = umz + cz + h * ez

        g = math.sqrt(1.0 + ux[k] * ux[k] + uy[k] * uy[k] + uz[k] * uz[k])
        x1 = x[k] + ux[k] / g * dt / dx
        y1 = y[k] + uy[k] / g * dt / dy
        _naive_deposit(J, ix[k], iy[k], x[k], y[k], x1, y1,
                       q * dx / dt, q * dy / dt, q * uz[k] / g, nx, ny, ts)

        sx = math.floor(x1)
        sy = math.floor(y1)
        x[k] = x1 - sx
        y[k] = y1 - sy
        if x[k] >= 1.0:
            x[k] = 0.0
            sx += 1.0
        if y[k] >= 1.0:
            y[k] = 0.0
            sy += 1.0
        ix[k] = (ix[k] + int(sx)) % nx
        iy[k] = (iy[k] + int(sy)) % ny


@numba.njit(cache=True)
def _naive_faraday(E, B, h, dx, dy, nx, ny):
    for i in range(nx):
        ip = (i + 1) % nx
        for j in range(ny):
            jp = (j + 1) % ny
            B[0, i, j] += -h * (E[2, i, jp] - E[2, i, j]) / dy
            B[1, i, j] += h * (E[2, ip, j] - E[2, i, j]) / dx
            B[2, i, j] += h * ((E[0, i, jp] - E[0, i, j]) / dy - (E[1, ip, j] - E[1, i, j]) / dx)


@numba.njit(cache=True)
def _naive_ampere(E, B, J, dt, dx, dy, nx, ny):
    for i in range(nx):
        im = (i - 1) % nx
        for j in range(ny):
            jm = (j - 1) % ny
            E[0, i, j] += dt * ((B[2, i, j] - B[2, i, jm]) / dy - J[0, i, j])
            E[1, i, j] += dt * (-(B[2, i, j] - B[2, im, j]) / dx - J[1, i, j])
            E[2, i, j] += dt * ((B[1, i, j] - B[1, im, j]) / dx
                                - (B[0, i, j] - B[0, i, jm]) / dy - J[2, i, j])


@numba.njit(cache=True)
def _naive_smooth(J, nx, ny):
    tmp = np.empty_like(J)
    for c in range(3):
        for i in range(nx):
            for j in range(ny):
                tmp[c, i, j] = 0.25 * J[c, (i - 1) % nx, j] + 0.5 * J[c, i, j] + 0.25 * J[c, (i + 1) % nx, j]
        for i in range(nx):
            for j in range(ny):
                J[c, i, j] = 0.25 * tmp[c, i, (j - 1) % ny] + 0.5 * tmp[c, i, j] + 0.25 * tmp[c, i, (j + 1) % ny]


def naive_advance_emf(E: np.ndarray, B: np.ndarray, J: np.ndarray, dt: float, dx: float, dy: float) -> None:
    """Leapfrog field update on guard-free periodic arrays ``(3, nx, ny)``."""
    nx, ny = E.shape[1:]
    _naive_faraday(E, B, 0.5 * dt, dx, dy, nx, ny)
    _naive_ampere(E, B, J, dt, dx, dy, nx, ny)
    _naive_faraday(E, B, 0.5 * dt, dx, dy, nx, ny)


@dataclass
class NaiveState:
    cfg: SimConfig
    E: np.ndarray
    B: np.ndarray
    J: np.ndarray
    species: list[tuple[SpeciesSpec, Particles]]
    step_index: int = 0

    @classmethod
    def from_sim_state(cls, state) -> "NaiveState":
        emf = state.emf
        return cls(state.cfg, emf.interior(emf.E).copy(), emf.interior(emf.B).copy(),
                   state.current.interior().copy(),
                   [(s, tm.particles.copy()) for s, tm in state.species], state.step_index)

    def density(self, k: int) -> np.ndarray:
        spec, p = self.species[k]
        return charge_density(p, spec.charge, self.cfg.nx, self.cfg.ny).rho


def naive_step(state: NaiveState) -> NaiveState:
    """One serial, untiled PIC step over every particle in storage order."""
    cfg = state.cfg
    if cfg.moving_window:
        raise NotImplementedError("the reference stepper only supports periodic boxes")
    nx, ny = cfg.nx, cfg.ny
    state.J[...] = 0.0
    for spec, p in state.species:
        _naive_particles(p.ix, p.iy, p.x, p.y, p.ux, p.uy, p.uz, state.E, state.B, state.J,
                         spec.charge, 1.0 / spec.m_over_q, cfg.dt, cfg.dx, cfg.dy, nx, ny)
    for _ in range(cfg.filter_passes):
        _naive_smooth(state.J, nx, ny)
    naive_advance_emf(state.E, state.B, state.J, cfg.dt, cfg.dx, cfg.dy)
    state.step_index += 1
    return state


def naive_sort(particles: Particles, tiles_x: int, tiles_y: int, tile_nx: int, tile_ny: int):
    """Stable comparison sort by tile; returns ``(sorted particles, offsets)``."""
    key = [(int(j) // tile_ny * tiles_x + int(i) // tile_nx, k)
           for k, (i, j) in enumerate(zip(particles.ix, particles.iy))]
    key.sort()
    order = np.array([k for _, k in key], dtype=np.int64)
    tiles = np.array([t for t, _ in key], dtype=np.int64)
    offsets = np.searchsorted(tiles, np.arange(tiles_x * tiles_y + 1), side="left")
    return particles.take(order), offsets.astype(np.int64)
