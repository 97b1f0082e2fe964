"""
Input deck reader and canonical writer.

A deck is INI-like text::

    # comment
    [simulation]
    nx = 64
    ...
    [species "electrons"]
    m_over_q = -1.0

Unknown sections and keys are errors; every problem is reported with its
line number. ``render_deck`` writes every key, defaults included, in a fixed
order, so ``render_deck(*parse_deck(text))`` is a fixpoint.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable

from ..core import SimConfig, SpeciesSpec, Vec3, validate_config
from ..engine import DEFAULT_FIELDS, GRID_FIELDS


class DeckError(ValueError):
    """Syntax or schema errors; ``errors`` is a list of ``(line, message)``, line 0 for
    whole-deck problems such as a missing section."""

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = errors
        # line 0 marks problems with the deck as a whole
        super().__init__("\n".join(f"line {n}: {msg}" if n else msg for n, msg in errors))


@dataclass(frozen=True)
class Diagnostics:
    fields: tuple[str, ...] = DEFAULT_FIELDS


def _int(v: str) -> int:
    return int(v, 10)


def _float(v: str) -> float:
    return float(v)


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("true", "false"):
        return low == "true"
    raise ValueError(f"expected true or false, got {v!r}")


def _fields(v: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in v.split(",") if s.strip())
    for n in names:
        if n not in GRID_FIELDS:
            raise ValueError(f"unknown report field {n!r}; choose from {', '.join(GRID_FIELDS)}")
    return names


_REQUIRED = object()

# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "simulation": {
        "nx": (_int, _REQUIRED), "ny": (_int, _REQUIRED),
        "dx": (_float, _REQUIRED), "dy": (_float, _REQUIRED),
        "dt": (_float, _REQUIRED), "n_steps": (_int, _REQUIRED),
        "seed": (_int, 0),
    },
    "tiles": {
        "tile_nx": (_int, _REQUIRED), "tile_ny": (_int, _REQUIRED), "guard": (_int, 3),
    },
    "species": {
        "m_over_q": (_float, _REQUIRED), "ppc_x": (_int, _REQUIRED), "ppc_y": (_int, _REQUIRED),
        "ufl_x": (_float, 0.0), "ufl_y": (_float, 0.0), "ufl_z": (_float, 0.0),
        "uth_x": (_float, 0.0), "uth_y": (_float, 0.0), "uth_z": (_float, 0.0),
        "density": (_float, 1.0),
    },
    "diagnostics": {
        "report_every": (_int, 10), "fields": (_fields, DEFAULT_FIELDS),
    },
    "features": {
        "filter_passes": (_int, 0), "moving_window": (_bool, False),
    },
}

_SECTION = re.compile(r'^\[\s*([A-Za-z_]\w*)(?:\s+"([^"]*)")?\s*\]$')
_ASSIGN = re.compile(r"^([A-Za-z_]\w*)\s*=\s*(.*)$")


def _read_sections(text: str):
    """Split deck text into ``(name, label, header line, {key: (value, line)})``."""
    sections: list[tuple[str, str | None, int, dict[str, tuple[Any, int]]]] = []
    errors: list[tuple[int, str]] = []
    seen: set[tuple[str, str | None]] = set()
    current = None
    bad_header = False
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            name, label = m.group(1), m.group(2)
            current = None
            bad_header = True
            if name not in SCHEMA:
                errors.append((n, f"unknown section [{name}]"))
            elif (name == "species") != (label is not None):
                errors.append((n, f"section [{name}] " + ("needs a quoted name" if name == "species"
                                                          else "takes no name")))
            elif (name, label) in seen:
                errors.append((n, f"duplicate section [{line[1:-1]}]"))
            else:
                seen.add((name, label))
                current = (name, label, n, {})
                sections.append(current)
                bad_header = False
            continue
        m = _ASSIGN.match(line)
        if not m:
            errors.append((n, f"cannot parse {raw.strip()!r}"))
            continue
        if current is None:
            # keys under a rejected header were already covered by its error
            if not bad_header:
                errors.append((n, "assignment before the first section"))
            continue
        key, value = m.group(1), m.group(2).strip()
        name, _, _, values = current
        if key not in SCHEMA[name]:
            errors.append((n, f"unknown key {key!r} in [{name}]"))
        elif key in values:
            errors.append((n, f"duplicate key {key!r}"))
        else:
            try:
                values[key] = (SCHEMA[name][key][0](value), n)
            except ValueError as exc:
                errors.append((n, f"bad value for {key!r}: {exc}"))
    return sections, errors


def parse_deck(text: str, validate: bool = True) -> tuple[SimConfig, Diagnostics]:
    """Parse a deck into a config and diagnostics spec.

    Raises :class:`DeckError` for syntax/schema problems and
    :class:`~tpic.core.ConfigError` if the result violates a config invariant.
    """
    sections, errors = _read_sections(text)
    resolved: dict[str, dict[str, Any]] = {}
    species: list[SpeciesSpec] = []

    def fill(name: str, line: int, values: dict) -> dict[str, Any]:
        out = {}
        for key, (_, default) in SCHEMA[name].items():
            if key in values:
                out[key] = values[key][0]
            elif default is _REQUIRED:
                errors.append((line, f"missing required key {key!r} in [{name}]"))
            else:
                out[key] = default
        return out

    for name, label, line, values in sections:
        v = fill(name, line, values)
        if name == "species":
            if len(v) == len(SCHEMA["species"]):
                species.append(SpeciesSpec(
                    name=label, m_over_q=v["m_over_q"], ppc=(v["ppc_x"], v["ppc_y"]),
                    u_fl=Vec3(v["ufl_x"], v["ufl_y"], v["ufl_z"]),
                    u_th=Vec3(v["uth_x"], v["uth_y"], v["uth_z"]), density=v["density"]))
        else:
            resolved[name] = v
    for name in SCHEMA:
        if name != "species" and name not in resolved:
            if any(d is _REQUIRED for _, d in SCHEMA[name].values()):
                errors.append((0, f"missing section [{name}]"))
            else:
                resolved[name] = fill(name, 0, {})
    if errors:
        raise DeckError(sorted(errors))

    sim, tiles = resolved["simulation"], resolved["tiles"]
    diag, feat = resolved["diagnostics"], resolved["features"]
    cfg = SimConfig(nx=sim["nx"], ny=sim["ny"], dx=sim["dx"], dy=sim["dy"], dt=sim["dt"],
                    n_steps=sim["n_steps"], tile_nx=tiles["tile_nx"], tile_ny=tiles["tile_ny"],
                    guard=tiles["guard"], species=tuple(species),
                    filter_passes=feat["filter_passes"], moving_window=feat["moving_window"],
                    seed=sim["seed"], report_every=diag["report_every"])
    if validate:
        validate_config(cfg)
    return cfg, Diagnostics(tuple(diag["fields"]))


def render_deck(cfg: SimConfig, diagnostics: Diagnostics = Diagnostics()) -> str:
    """Canonical deck text for ``cfg``."""
    def fmt(v) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, tuple):
            return ", ".join(v)
        return repr(v)

    def block(header: str, items: dict) -> list[str]:
        return [header] + [f"{k} = {fmt(v)}" for k, v in items.items()] + [""]

    lines = block("[simulation]", dict(nx=cfg.nx, ny=cfg.ny, dx=float(cfg.dx), dy=float(cfg.dy),
                                       dt=float(cfg.dt), n_steps=cfg.n_steps, seed=cfg.seed))
    lines += block("[tiles]", dict(tile_nx=cfg.tile_nx, tile_ny=cfg.tile_ny, guard=cfg.guard))
    for s in cfg.species:
        lines += block(f'[species "{s.name}"]', dict(
            m_over_q=float(s.m_over_q), ppc_x=s.ppc[0], ppc_y=s.ppc[1],
            ufl_x=float(s.u_fl[0]), ufl_y=float(s.u_fl[1]), ufl_z=float(s.u_fl[2]),
            uth_x=float(s.u_th[0]), uth_y=float(s.u_th[1]), uth_z=float(s.u_th[2]),
            density=float(s.density)))
    lines += block("[diagnostics]", dict(report_every=cfg.report_every,
                                         fields=tuple(diagnostics.fields)))
    lines += block("[features]", dict(filter_passes=cfg.filter_passes,
                                      moving_window=cfg.moving_window))
    return "\n".join(lines)
