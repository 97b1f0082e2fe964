"""
The PIC loop with a tile-parallel particle advance.

Each tile is advanced by one worker into a private current buffer covering
the tile plus its guard ring; buffers are then added into the global current.
In deterministic mode the additions happen in ascending tile order, so the
result is bitwise independent of the worker count. In fast mode workers pull
tiles from a shared queue and add their buffer under a lock as soon as they
finish, so the summation order (and the last bits) may vary between runs.
"""
from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numba
import numpy as np

from . import fields as fl
from .core import Particles, SimConfig, SpeciesSpec, init_species, load_column
from .deposit import _deposit_current
from .pusher import CourantError, _boris, _displacement, _interp_emf, _renormalize
from .tiling import TileMap, sort_tiles

log = logging.getLogger(__name__)

DEFAULT_FIELDS = ("Bz", "Bmag", "charge")
GRID_FIELDS = ("Ex", "Ey", "Ez", "Bx", "By", "Bz", "Bmag", "charge")


class StepError(RuntimeError):
    def __init__(self, step: int, cause: BaseException):
        self.step = step
        super().__init__(f"step {step}: {cause}")


class ReportSink(Protocol):
    """Receives diagnostics. Grid payloads are ``(ny, nx)`` arrays, x fastest."""

    def grid(self, name: str, step: int, time: float, data: np.ndarray,
             dx: float, dy: float) -> None: ...

    def scalars(self, step: int, time: float, values: dict[str, float]) -> None: ...


@dataclass
class SimState:
    cfg: SimConfig
    emf: fl.YeeGrid
    current: fl.CurrentGrid
    species: list[tuple[SpeciesSpec, TileMap]]
    step_index: int = 0
    window_shifts: int = 0

    @classmethod
    def initial(cls, cfg: SimConfig) -> "SimState":
        periodic_x = not cfg.moving_window
        emf = fl.YeeGrid.zeros(cfg.nx, cfg.ny, cfg.guard, cfg.dx, cfg.dy, periodic_x)
        current = fl.CurrentGrid.zeros(cfg.nx, cfg.ny, cfg.guard, periodic_x)
        species = [(s, TileMap.from_particles(init_species(s, cfg), cfg.tiles_x, cfg.tiles_y,
                                              cfg.tile_nx, cfg.tile_ny))
                   for s in cfg.species]
        return cls(cfg, emf, current, species)

    @property
    def time(self) -> float:
        return self.step_index * self.cfg.dt

    def copy(self) -> "SimState":
        species = [(s, TileMap(tm.particles.copy(), tm.tile_offset.copy(), tm.tiles_x,
                               tm.tiles_y, tm.tile_nx, tm.tile_ny))
                   for s, tm in self.species]
        cur = fl.CurrentGrid(self.current.J.copy(), self.current.nx, self.current.ny,
                             self.current.guard, self.current.periodic_x)
        return SimState(self.cfg, self.emf.copy(), cur, species, self.step_index,
                        self.window_shifts)


@numba.njit(cache=True, nogil=True)
def _advance_particles(ix, iy, x, y, ux, uy, uz, start, end, E, B, g, J, ox, oy, tg,
                       q, q_over_m, dt, dx, dy, nx, ny, periodic_x):
    """Push particles ``start:end`` and deposit into the buffer ``J``.

    ``J`` holds cells ``ox - tg`` .. of the grid along x (``oy - tg`` along y).
    Returns -1, or the index of a particle that broke the Courant limit.
    """
    segs = np.empty((3, 7))
    qnx = q * dx / dt
    qny = q * dy / dt
    for k in range(start, end):
        i = ix[k]
        j = iy[k]
        ex, ey, ez, bx, by, bz = _interp_emf(E, B, i + g, j + g, x[k], y[k])
        vx, vy, vz = _boris(ux[k], uy[k], uz[k], ex, ey, ez, bx, by, bz, q_over_m, dt)
        ux[k] = vx
        uy[k] = vy
        uz[k] = vz
        ddx, ddy = _displacement(vx, vy, vz, dt, dx, dy)
        x1 = x[k] + ddx
        y1 = y[k] + ddy
        qvz = q * vz / math.sqrt(1.0 + vx * vx + vy * vy + vz * vz)
        if _deposit_current(J, i - ox + tg, j - oy + tg, x[k], y[k], x1, y1,
                            qnx, qny, qvz, segs) < 0:
            return k
        cx, fx = _renormalize(x1)
        cy, fy = _renormalize(y1)
        i += cx
        j += cy
        if periodic_x:
            if i < 0:
                i += nx
            elif i >= nx:
                i -= nx
        if j < 0:
            j += ny
        elif j >= ny:
            j -= ny
        ix[k] = i
        iy[k] = j
        x[k] = fx
        y[k] = fy
    return -1


def advance_tile(t: int, species: SpeciesSpec, tm: TileMap, emf: fl.YeeGrid, buffer: np.ndarray,
                 dt: float) -> None:
    """Advance every particle of tile ``t`` and deposit into a private buffer.

    ``buffer`` has shape ``(3, tile_nx + 2*guard, tile_ny + 2*guard)`` and must
    be zeroed by the caller.
    """
    sec = tm.section(t)
    if sec.start == sec.stop:
        return
    ox, oy = tm.tile_origin(t)
    p = tm.particles
    bad = _advance_particles(p.ix, p.iy, p.x, p.y, p.ux, p.uy, p.uz, sec.start, sec.stop,
                             emf.E, emf.B, emf.guard, buffer, ox, oy, emf.guard,
                             species.charge, 1.0 / species.m_over_q, dt, emf.dx, emf.dy,
                             emf.nx, emf.ny, emf.periodic_x)
    if bad >= 0:
        raise CourantError(f"species {species.name!r}: particle {bad} in tile {t} "
                           f"moved a cell or more in one step")


def _merge_one(global_J: np.ndarray, buffer: np.ndarray, ox: int, oy: int) -> None:
    # global array index of cell c is c + guard and the buffer starts at
    # cell ox - guard, so the buffer lands at global index ox
    mx, my = buffer.shape[1:]
    global_J[:, ox:ox + mx, oy:oy + my] += buffer


def merge_currents(current: fl.CurrentGrid, tm: TileMap,
                   buffers: Iterable[tuple[int, np.ndarray]]) -> None:
    """Add per-tile buffers (with their guard rings) into the global current, in order."""
    for t, buf in buffers:
        _merge_one(current.J, buf, *tm.tile_origin(t))


class TileScheduler:
    """Runs tile advances on a pool of worker threads.

    Private buffers are pooled per worker, not per tile.
    """

    def __init__(self, workers: int = 1, deterministic: bool = True):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self.deterministic = deterministic
        self._executor = ThreadPoolExecutor(workers, thread_name_prefix="tile") if workers > 1 else None
        self._pool: list[np.ndarray] = []
        self._local = threading.local()
        self._lock = threading.Lock()

    def __enter__(self) -> "TileScheduler":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def _buffers(self, shape) -> list[np.ndarray]:
        if not self._pool or self._pool[0].shape != shape:
            self._pool = [np.zeros(shape) for _ in range(self.workers)]
        return self._pool

    def _thread_buffer(self, shape) -> np.ndarray:
        buf = getattr(self._local, "buf", None)
        if buf is None or buf.shape != shape:
            buf = self._local.buf = np.zeros(shape)
        buf[...] = 0.0
        return buf

    def advance_species(self, species: SpeciesSpec, tm: TileMap, emf: fl.YeeGrid,
                        current: fl.CurrentGrid, dt: float) -> None:
        g = emf.guard
        shape = (3, tm.tile_nx + 2 * g, tm.tile_ny + 2 * g)
        tiles = range(tm.n_tiles)

        if self._executor is None or self.deterministic:
            pool = self._buffers(shape)
            for start in range(0, tm.n_tiles, self.workers):
                batch = list(tiles[start:start + self.workers])

                def work(w_t):
                    w, t = w_t
                    pool[w][...] = 0.0
                    advance_tile(t, species, tm, emf, pool[w], dt)

                if self._executor is None:
                    for item in enumerate(batch):
                        work(item)
                else:
                    list(self._executor.map(work, enumerate(batch)))
                merge_currents(current, tm, ((t, pool[w]) for w, t in enumerate(batch)))
            return

        def work_fast(t):
            buf = self._thread_buffer(shape)
            advance_tile(t, species, tm, emf, buf, dt)
            ox, oy = tm.tile_origin(t)
            with self._lock:
                _merge_one(current.J, buf, ox, oy)

        for fut in [self._executor.submit(work_fast, t) for t in tiles]:
            fut.result()


def _window_update(state: SimState) -> None:
    cfg = state.cfg
    shift = state.time > cfg.dx * (state.window_shifts + 1)
    if shift:
        fl.shift_window(state.emf)
        state.window_shifts += 1
    for k, (spec, tm) in enumerate(state.species):
        p = tm.particles
        if shift:
            p.ix -= 1
        keep = (p.ix >= 0) & (p.ix < cfg.nx)
        parts = [p.take(keep)] if not keep.all() else [p]
        if shift:
            column = cfg.nx - 1 + state.window_shifts
            parts.append(load_column(spec, cfg.ny, cfg.nx - 1, column, cfg.seed))
        if len(parts) > 1 or parts[0] is not p:
            state.species[k] = (spec, TileMap.from_particles(
                Particles.concat(parts), tm.tiles_x, tm.tiles_y, tm.tile_nx, tm.tile_ny))
        else:
            sort_tiles(tm)


def step(state: SimState, scheduler: TileScheduler | None = None) -> None:
    """Advance the whole simulation by one time step, in place."""
    own = scheduler is None
    if own:
        scheduler = TileScheduler()
    cfg = state.cfg
    try:
        fl.current_zero(state.current)
        for spec, tm in state.species:
            scheduler.advance_species(spec, tm, state.emf, state.current, cfg.dt)
        fl.update_gc_add(state.current)
        if cfg.filter_passes > 0:
            fl.binomial_filter(state.current, cfg.filter_passes)
            fl.update_gc_copy(state.current.J, cfg.guard, state.current.periodic_x)
        fl.advance_emf(state.emf, state.current, cfg.dt)
        state.step_index += 1
        if cfg.moving_window:
            _window_update(state)
        else:
            for _, tm in state.species:
                sort_tiles(tm)
    except Exception as exc:
        raise StepError(state.step_index, exc) from exc
    finally:
        if own:
            scheduler.close()


@numba.njit(cache=True, nogil=True)
def _charge_kernel(rho, ix, iy, x, y, q, g):
    for k in range(len(x)):
        i = ix[k] + g
        j = iy[k] + g
        wx = x[k]
        wy = y[k]
        rho[i, j] += q * (1.0 - wx) * (1.0 - wy)
        rho[i + 1, j] += q * wx * (1.0 - wy)
        rho[i, j + 1] += q * (1.0 - wx) * wy
        rho[i + 1, j + 1] += q * wx * wy


def charge_density(spec: SpeciesSpec, tm: TileMap, guard: int = 1, periodic_x: bool = True) -> np.ndarray:
    """Area-weighted charge density at the grid nodes, interior ``(nx, ny)``."""
    rho = np.zeros((1, tm.nx + 2 * guard, tm.ny + 2 * guard))
    p = tm.particles
    _charge_kernel(rho[0], p.ix, p.iy, p.x, p.y, spec.charge, guard)
    cur = fl.CurrentGrid(rho, tm.nx, tm.ny, guard, periodic_x)
    fl.update_gc_add(cur)
    return cur.interior()[0].copy()


def kinetic_energy(state: SimState) -> float:
    area = state.cfg.dx * state.cfg.dy
    total = 0.0
    for spec, tm in state.species:
        g = tm.particles.gamma()
        total += abs(spec.charge * spec.m_over_q) * float(np.sum(g - 1.0)) * area
    return total


def energies(state: SimState) -> dict[str, float]:
    e, b = fl.field_energy(state.emf)
    return {"field_e": e, "field_b": b, "kinetic": kinetic_energy(state)}


def grid_reports(state: SimState, names: Sequence[str] = DEFAULT_FIELDS) -> dict[str, np.ndarray]:
    """Named ``(ny, nx)`` report arrays; ``charge`` expands to one per species."""
    emf = state.emf
    out: dict[str, np.ndarray] = {}
    for name in names:
        if name in ("Ex", "Ey", "Ez", "Bx", "By", "Bz"):
            arr = emf.E if name[0] == "E" else emf.B
            out[name] = emf.interior(arr)["xyz".index(name[1])].T.copy()
        elif name == "Bmag":
            out[name] = np.sqrt(np.sum(emf.interior(emf.B) ** 2, axis=0)).T.copy()
        elif name == "charge":
            for spec, tm in state.species:
                out[f"charge-{spec.name}"] = charge_density(spec, tm, periodic_x=emf.periodic_x).T.copy()
        else:
            raise ValueError(f"unknown report field {name!r}; choose from {GRID_FIELDS}")
    return out


def emit(state: SimState, sinks: Sequence[ReportSink], names: Sequence[str]) -> None:
    cfg = state.cfg
    for name, data in grid_reports(state, names).items():
        for s in sinks:
            s.grid(name, state.step_index, state.time, data, cfg.dx, cfg.dy)
    values = energies(state)
    for s in sinks:
        s.scalars(state.step_index, state.time, values)


def run(state: SimState, n_steps: int, sinks: Sequence[ReportSink] = (), *, workers: int = 1,
        deterministic: bool = True, fields: Sequence[str] = DEFAULT_FIELDS) -> SimState:
    """Run ``n_steps`` steps, reporting every ``cfg.report_every`` steps and at the end."""
    if n_steps <= 0:
        return state
    every = state.cfg.report_every
    with TileScheduler(workers, deterministic) as sched:
        if sinks and state.step_index % every == 0:
            emit(state, sinks, fields)
        for n in range(n_steps):
            step(state, sched)
            last = n == n_steps - 1
            if sinks and (state.step_index % every == 0 or last):
                emit(state, sinks, fields)
            if state.step_index % max(every, 1) == 0:
                log.info("step %d / t = %.4g", state.step_index, state.time)
    return state
