"""
Staggered electromagnetic fields on a 2D Yee grid.

Arrays have shape ``(3, nx + 2*guard, ny + 2*guard)``; interior cell
``(i, j)`` lives at array index ``(i + guard, j + guard)``. Component
positions in cell units::

    Ex (i+1/2, j)      Bx (i, j+1/2)      Jx (i+1/2, j)
    Ey (i, j+1/2)      By (i+1/2, j)      Jy (i, j+1/2)
    Ez (i, j)          Bz (i+1/2, j+1/2)  Jz (i, j)

Boundaries are periodic. A grid with ``periodic_x=False`` (moving window)
keeps its x guards at zero instead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class YeeGrid:
    E: np.ndarray
    B: np.ndarray
    nx: int
    ny: int
    guard: int
    dx: float
    dy: float
    periodic_x: bool = True

    @classmethod
    def zeros(cls, nx: int, ny: int, guard: int, dx: float, dy: float,
              periodic_x: bool = True) -> "YeeGrid":
        shape = (3, nx + 2 * guard, ny + 2 * guard)
        return cls(np.zeros(shape), np.zeros(shape), nx, ny, guard, dx, dy, periodic_x)

    def interior(self, a: np.ndarray) -> np.ndarray:
        g = self.guard
        return a[..., g:g + self.nx, g:g + self.ny]

    def copy(self) -> "YeeGrid":
        return YeeGrid(self.E.copy(), self.B.copy(), self.nx, self.ny, self.guard,
                       self.dx, self.dy, self.periodic_x)


@dataclass
class CurrentGrid:
    J: np.ndarray
    nx: int
    ny: int
    guard: int
    periodic_x: bool = True

    @classmethod
    def zeros(cls, nx: int, ny: int, guard: int, periodic_x: bool = True) -> "CurrentGrid":
        return cls(np.zeros((3, nx + 2 * guard, ny + 2 * guard)), nx, ny, guard, periodic_x)

    def interior(self) -> np.ndarray:
        g = self.guard
        return self.J[..., g:g + self.nx, g:g + self.ny]


def current_zero(current: CurrentGrid) -> None:
    current.J[...] = 0.0


def update_gc_copy(a: np.ndarray, guard: int, periodic_x: bool = True) -> None:
    """Fill guard cells of ``a`` (last two axes spatial) from the interior."""
    g = guard
    nx = a.shape[-2] - 2 * g
    ny = a.shape[-1] - 2 * g
    if periodic_x:
        a[..., :g, :] = a[..., nx:nx + g, :]
        a[..., nx + g:, :] = a[..., g:2 * g, :]
    else:
        a[..., :g, :] = 0.0
        a[..., nx + g:, :] = 0.0
    a[..., :, :g] = a[..., :, ny:ny + g]
    a[..., :, ny + g:] = a[..., :, g:2 * g]


def update_gc_add(current: CurrentGrid) -> None:
    """Fold current deposited in guard cells back onto the periodic interior."""
    J, g = current.J, current.guard
    nx, ny = current.nx, current.ny
    if current.periodic_x:
        J[:, nx:nx + g, :] += J[:, :g, :]
        J[:, g:2 * g, :] += J[:, nx + g:, :]
    J[:, :, ny:ny + g] += J[:, :, :g]
    J[:, :, g:2 * g] += J[:, :, ny + g:]
    update_gc_copy(J, g, current.periodic_x)


def yee_b(grid: YeeGrid, dt_frac: float) -> None:
    """Advance B over the interior by ``dt_frac`` using Faraday's law."""
    E, B, g = grid.E, grid.B, grid.guard
    i0, j0 = slice(g, g + grid.nx), slice(g, g + grid.ny)
    i1, j1 = slice(g + 1, g + grid.nx + 1), slice(g + 1, g + grid.ny + 1)
    cx, cy = dt_frac / grid.dx, dt_frac / grid.dy

    B[0, i0, j0] -= cy * (E[2, i0, j1] - E[2, i0, j0])
    B[1, i0, j0] += cx * (E[2, i1, j0] - E[2, i0, j0])
    B[2, i0, j0] += (cy * (E[0, i0, j1] - E[0, i0, j0])
                     - cx * (E[1, i1, j0] - E[1, i0, j0]))


def yee_e(grid: YeeGrid, current: CurrentGrid, dt: float) -> None:
    """Advance E over the interior by ``dt`` using Ampere's law with current."""
    E, B, J, g = grid.E, grid.B, current.J, grid.guard
    i0, j0 = slice(g, g + grid.nx), slice(g, g + grid.ny)
    im, jm = slice(g - 1, g + grid.nx - 1), slice(g - 1, g + grid.ny - 1)
    cx, cy = dt / grid.dx, dt / grid.dy

    E[0, i0, j0] += cy * (B[2, i0, j0] - B[2, i0, jm]) - dt * J[0, i0, j0]
    E[1, i0, j0] += -cx * (B[2, i0, j0] - B[2, im, j0]) - dt * J[1, i0, j0]
    E[2, i0, j0] += (cx * (B[1, i0, j0] - B[1, im, j0])
                     - cy * (B[0, i0, j0] - B[0, i0, jm])
                     - dt * J[2, i0, j0])


def advance_emf(grid: YeeGrid, current: CurrentGrid, dt: float) -> None:
    """Half B step, full E step, half B step, refreshing guards in between."""
    g, px = grid.guard, grid.periodic_x
    yee_b(grid, 0.5 * dt)
    update_gc_copy(grid.B, g, px)
    yee_e(grid, current, dt)
    update_gc_copy(grid.E, g, px)
    yee_b(grid, 0.5 * dt)
    update_gc_copy(grid.B, g, px)


def binomial_filter(current: CurrentGrid, passes: int) -> None:
    """Smooth J with a [1/4, 1/2, 1/4] kernel along x then y, ``passes`` times."""
    J, g = current.J, current.guard
    nx, ny = current.nx, current.ny
    i0, j0 = slice(g, g + nx), slice(g, g + ny)
    for _ in range(passes):
        J[:, i0, :] = (0.25 * J[:, g - 1:g + nx - 1, :] + 0.5 * J[:, i0, :]
                       + 0.25 * J[:, g + 1:g + nx + 1, :])
        update_gc_copy(J, g, current.periodic_x)
        J[:, :, j0] = (0.25 * J[:, :, g - 1:g + ny - 1] + 0.5 * J[:, :, j0]
                       + 0.25 * J[:, :, g + 1:g + ny + 1])
        update_gc_copy(J, g, current.periodic_x)


def shift_window(grid: YeeGrid) -> None:
    """Shift E and B one cell towards -x; the new right column starts at zero."""
    if grid.periodic_x:
        raise RuntimeError("shift_window needs a moving-window grid (periodic_x=False)")
    g, nx = grid.guard, grid.nx
    for a in (grid.E, grid.B):
        a[:, g:g + nx - 1, :] = a[:, g + 1:g + nx, :]
        a[:, g + nx - 1, :] = 0.0
        update_gc_copy(a, g, periodic_x=False)


def field_energy(grid: YeeGrid) -> tuple[float, float]:
    """Electric and magnetic energy, sum(|F|^2) * dx * dy / 2 over the interior."""
    w = 0.5 * grid.dx * grid.dy
    return (float(np.sum(grid.interior(grid.E) ** 2)) * w,
            float(np.sum(grid.interior(grid.B) ** 2)) * w)
