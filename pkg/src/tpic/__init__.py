"""Tiled, parallel 2D relativistic electromagnetic particle-in-cell code."""
from .core import (ConfigError, Particle, Particles, SimConfig, SpeciesSpec, Vec3, courant_limit,
                   init_species, lorentz_gamma, validate_config)
from .engine import SimState, run, step

__version__ = "0.1.0"
