"""
Normalized-unit domain types, configuration checks and plasma loading.

All quantities use normalized units (c = 1, plasma frequency 1 for unit
density); positions of particles are kept as an integer cell index plus a
fractional offset inside that cell.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``violations`` holds ``(code, message)`` pairs, one per broken rule.
    """

    def __init__(self, violations: Sequence[tuple[str, str]]):
        self.violations = list(violations)
        super().__init__("; ".join(f"{code}: {msg}" for code, msg in self.violations))

    @property
    def codes(self) -> list[str]:
        return [code for code, _ in self.violations]


class Vec3(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0


@dataclass(frozen=True)
class Particle:
    """A single macro-particle (used at API boundaries and in tests)."""

    ix: int
    iy: int
    x: float
    y: float
    u: Vec3 = Vec3()


@dataclass(frozen=True)
class SpeciesSpec:
    name: str
    m_over_q: float
    ppc: tuple[int, int] = (1, 1)
    u_fl: Vec3 = Vec3()
    u_th: Vec3 = Vec3()
    density: float = 1.0

    @property
    def charge(self) -> float:
        """Charge carried by one macro-particle (signed, density units)."""
        return math.copysign(self.density / (self.ppc[0] * self.ppc[1]), self.m_over_q)


@dataclass(frozen=True)
class SimConfig:
    nx: int
    ny: int
    dx: float
    dy: float
    dt: float
    n_steps: int = 0
    tile_nx: int = 1
    tile_ny: int = 1
    guard: int = 3
    species: tuple[SpeciesSpec, ...] = ()
    filter_passes: int = 0
    moving_window: bool = False
    seed: int = 0
    report_every: int = 10

    @property
    def tiles_x(self) -> int:
        return self.nx // self.tile_nx

    @property
    def tiles_y(self) -> int:
        return self.ny // self.tile_ny

    @property
    def n_tiles(self) -> int:
        return self.tiles_x * self.tiles_y


def courant_limit(dx: float, dy: float) -> float:
    """Largest stable time step (exclusive) for cell sizes ``dx``, ``dy``."""
    if not (dx > 0 and dy > 0):
        raise ValueError(f"cell sizes must be positive, got dx={dx!r}, dy={dy!r}")
    return 1.0 / math.sqrt(1.0 / dx**2 + 1.0 / dy**2)


def validate_config(cfg: SimConfig) -> SimConfig:
    """Return ``cfg`` unchanged if it is valid, raise :class:`ConfigError` otherwise.

    Every violated invariant is reported, not just the first one.
    """
    bad: list[tuple[str, str]] = []

    if cfg.nx < 1 or cfg.ny < 1:
        bad.append(("grid-size", f"grid must have at least one cell, got {cfg.nx}x{cfg.ny}"))
    if not (cfg.dx > 0 and cfg.dy > 0):
        bad.append(("cell-size", f"cell sizes must be positive, got dx={cfg.dx}, dy={cfg.dy}"))
    elif not cfg.dt > 0:
        bad.append(("time-step", f"dt must be positive, got {cfg.dt}"))
    else:
        limit = courant_limit(cfg.dx, cfg.dy)
        if not cfg.dt < limit:
            bad.append(("courant-violation",
                        f"dt={cfg.dt} must be below the Courant limit {limit!r}"))

    if cfg.tile_nx < 2 or cfg.tile_ny < 2:
        bad.append(("tile-too-small",
                    f"tiles need at least 2 cells per axis, got {cfg.tile_nx}x{cfg.tile_ny}"))
    if cfg.tile_nx >= 1 and cfg.nx % cfg.tile_nx:
        bad.append(("tiling-mismatch", f"nx={cfg.nx} is not divisible by tile_nx={cfg.tile_nx}"))
    if cfg.tile_ny >= 1 and cfg.ny % cfg.tile_ny:
        bad.append(("tiling-mismatch", f"ny={cfg.ny} is not divisible by tile_ny={cfg.tile_ny}"))
    if cfg.guard < 2:
        bad.append(("guard-too-small", f"guard must be >= 2, got {cfg.guard}"))
    elif cfg.guard > min(cfg.nx, cfg.ny):
        bad.append(("guard-too-large", f"guard={cfg.guard} exceeds the grid size"))

    if cfg.n_steps < 0:
        bad.append(("n-steps", f"n_steps must be >= 0, got {cfg.n_steps}"))
    if cfg.report_every < 1:
        bad.append(("report-every", f"report_every must be >= 1, got {cfg.report_every}"))
    if cfg.filter_passes < 0:
        bad.append(("filter-passes", f"filter_passes must be >= 0, got {cfg.filter_passes}"))
    if not 0 <= cfg.seed < 2**64:
        bad.append(("seed", f"seed must be an unsigned 64-bit integer, got {cfg.seed}"))

    names = [s.name for s in cfg.species]
    if len(set(names)) != len(names):
        bad.append(("species-name", f"duplicate species names in {names}"))
    for s in cfg.species:
        if s.ppc[0] < 1 or s.ppc[1] < 1:
            bad.append(("species-ppc", f"species {s.name!r}: ppc must be >= 1, got {s.ppc}"))
        if s.m_over_q == 0 or not math.isfinite(s.m_over_q):
            bad.append(("species-mass", f"species {s.name!r}: m_over_q must be finite and non-zero"))
        if not s.density > 0:
            bad.append(("species-density", f"species {s.name!r}: density must be positive"))
        if not all(math.isfinite(v) for v in (*s.u_fl, *s.u_th)):
            bad.append(("species-momentum", f"species {s.name!r}: non-finite u_fl/u_th"))

    if bad:
        raise ConfigError(bad)
    return cfg


def lorentz_gamma(u: Sequence[float]) -> float:
    ux, uy, uz = u
    return math.sqrt(1.0 + ux * ux + uy * uy + uz * uz)


@dataclass
class Particles:
    """Structure-of-arrays particle storage."""

    ix: np.ndarray
    iy: np.ndarray
    x: np.ndarray
    y: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    uz: np.ndarray

    FIELDS = ("ix", "iy", "x", "y", "ux", "uy", "uz")

    @classmethod
    def empty(cls, n: int = 0) -> "Particles":
        ints = [np.zeros(n, dtype=np.int64) for _ in range(2)]
        reals = [np.zeros(n, dtype=np.float64) for _ in range(5)]
        return cls(*ints, *reals)

    @classmethod
    def from_records(cls, records: Sequence[Particle]) -> "Particles":
        p = cls.empty(len(records))
        for k, r in enumerate(records):
            p.ix[k], p.iy[k], p.x[k], p.y[k] = r.ix, r.iy, r.x, r.y
            p.ux[k], p.uy[k], p.uz[k] = r.u
        return p

    @classmethod
    def concat(cls, parts: Sequence["Particles"]) -> "Particles":
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.FIELDS))

    def __len__(self) -> int:
        return len(self.x)

    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)

    def take(self, idx) -> "Particles":
        return Particles(*(a[idx] for a in self.arrays()))

    def copy(self) -> "Particles":
        return Particles(*(a.copy() for a in self.arrays()))

    def record(self, k: int) -> Particle:
        return Particle(int(self.ix[k]), int(self.iy[k]), float(self.x[k]), float(self.y[k]),
                        Vec3(float(self.ux[k]), float(self.uy[k]), float(self.uz[k])))

    def records(self) -> list[Particle]:
        return [self.record(k) for k in range(len(self))]

    def gamma(self) -> np.ndarray:
        return np.sqrt(1.0 + self.ux**2 + self.uy**2 + self.uz**2)


def _column_stream(seed: int, name: str, column: int) -> np.random.Generator:
    # One Philox stream per (seed, species, global column): loading and later
    # injection of the same column draw identical momenta.
    key = np.random.SeedSequence([seed, zlib.crc32(name.encode()), column])
    return np.random.Generator(np.random.Philox(key))


def load_column(spec: SpeciesSpec, ny: int, ix: int, column: int, seed: int) -> Particles:
    """Particles for one grid column at cell index ``ix``.

    ``column`` is the global column number keying the random stream; it
    differs from ``ix`` once a moving window has shifted the box.
    """
    px, py = spec.ppc
    per_cell = px * py
    n = ny * per_cell
    ox = (np.arange(px) + 0.5) / px
    oy = (np.arange(py) + 0.5) / py
    sub_x, sub_y = np.meshgrid(ox, oy, indexing="ij")

    p = Particles.empty(n)
    p.ix[:] = ix
    p.iy[:] = np.repeat(np.arange(ny), per_cell)
    p.x[:] = np.tile(sub_x.ravel(), ny)
    p.y[:] = np.tile(sub_y.ravel(), ny)

    draws = _column_stream(seed, spec.name, column).standard_normal((n, 3))
    for c, (arr, fl, th) in enumerate(zip((p.ux, p.uy, p.uz), spec.u_fl, spec.u_th)):
        arr[:] = fl + th * draws[:, c]
    return p


def init_species(spec: SpeciesSpec, cfg: SimConfig, rng_seed: int | None = None) -> Particles:
    """Uniform plasma of one species: ``ppc`` sub-lattice in every cell.

    Momenta are ``u_fl`` plus an independent Gaussian of width ``u_th`` per
    component. The result is ordered column by column, not by tile.
    """
    seed = cfg.seed if rng_seed is None else rng_seed
    return Particles.concat([load_column(spec, cfg.ny, i, i, seed) for i in range(cfg.nx)])
