"""
Ready-made decks for the three benchmark plasmas.

At scale 1 every deck has a 500x500 grid with 10x10 particles per cell per
species and runs 500 steps. ``scale`` shrinks the grid edge (kept even) and
with it the particle count; cell size, time step and ppc stay fixed.
"""
from __future__ import annotations

from ..core import SimConfig, SpeciesSpec, Vec3
from .deck import render_deck

PRESETS = ("cold", "warm", "weibel")

BASE_CELLS = 500
PPC = (10, 10)
DX = DY = 0.1
DT = 0.07
N_STEPS = 500
REPORT_EVERY = 50
MAX_TILE = 25

# counter-streaming plasma; free choices, large enough to grow quickly
WEIBEL_U_STREAM = 0.6
WEIBEL_U_TH = 0.1


def _tile(n: int) -> int:
    return max(d for d in range(2, MAX_TILE + 1) if n % d == 0)


def preset_config(name: str, scale: float = 1.0) -> SimConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    if not 0 < scale <= 1:
        raise ValueError(f"scale must be in (0, 1], got {scale}")
    n = max(4, 2 * round(BASE_CELLS * scale / 2))

    if name == "cold":
        species = (SpeciesSpec("electrons", -1.0, PPC),)
    elif name == "warm":
        species = (SpeciesSpec("electrons", -1.0, PPC, u_th=Vec3(1.0, 1.0, 1.0)),)
    else:
        th = Vec3(WEIBEL_U_TH, WEIBEL_U_TH, WEIBEL_U_TH)
        species = (SpeciesSpec("electrons", -1.0, PPC, Vec3(0.0, 0.0, WEIBEL_U_STREAM), th),
                   SpeciesSpec("positrons", 1.0, PPC, Vec3(0.0, 0.0, -WEIBEL_U_STREAM), th))
    t = _tile(n)
    return SimConfig(nx=n, ny=n, dx=DX, dy=DY, dt=DT, n_steps=N_STEPS, tile_nx=t, tile_ny=t,
                     guard=3, species=species, report_every=REPORT_EVERY)


def preset_deck(name: str, scale: float = 1.0) -> str:
    return render_deck(preset_config(name, scale))
