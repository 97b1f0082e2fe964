import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from tpic import ConfigError, SimConfig, SpeciesSpec, Vec3
from tpic.cli import main
from tpic.io import (BadMagicError, DeckError, Diagnostics, GridReport, ReportFormatError,
                     TruncatedReportError, VersionMismatchError, parse_deck, preset_config,
                     preset_deck, read_report, render_deck, report_csv, write_report)
from tpic.io.report import from_bytes, to_bytes

MINIMAL = """\
[simulation]
nx = 8
ny = 8
dx = 0.1
dy = 0.1
dt = 0.05
n_steps = 4

[tiles]
tile_nx = 4
tile_ny = 4

[species "electrons"]
m_over_q = -1
ppc_x = 2
ppc_y = 2
"""


def test_minimal_deck_defaults():
    cfg, diag = parse_deck(MINIMAL)
    assert (cfg.nx, cfg.ny, cfg.dt, cfg.n_steps) == (8, 8, 0.05, 4)
    assert cfg.guard == 3 and cfg.filter_passes == 0 and cfg.moving_window is False
    assert cfg.seed == 0 and cfg.report_every == 10
    sp = cfg.species[0]
    assert sp == SpeciesSpec("electrons", -1.0, (2, 2), Vec3(0, 0, 0), Vec3(0, 0, 0), 1.0)
    assert diag.fields == ("Bz", "Bmag", "charge")


def test_courant_violation_names_limit():
    with pytest.raises(ConfigError) as err:
        parse_deck(MINIMAL.replace("dt = 0.05", "dt = 0.08"))
    assert "courant-violation" in err.value.codes
    assert "0.0707106781" in str(err.value)


def test_misspelled_key_line():
    text = MINIMAL.replace("tile_nx = 4", "tilenx = 4")
    with pytest.raises(DeckError) as err:
        parse_deck(text)
    line = text.splitlines().index("tilenx = 4") + 1
    assert (line, "unknown key 'tilenx' in [tiles]") in err.value.errors
    assert f"line {line}" in str(err.value)


@pytest.mark.parametrize("edit, fragment", [
    (lambda t: t + "[bogus]\nx = 1\n", "unknown section [bogus]"),
    (lambda t: t.replace("nx = 8", "nx = eight"), "bad value for 'nx'"),
    (lambda t: t.replace("n_steps = 4\n", ""), "missing required key 'n_steps'"),
    (lambda t: t.replace('[species "electrons"]', "[species]"), "needs a quoted name"),
    (lambda t: t + '[species "electrons"]\nm_over_q = 1\nppc_x = 1\nppc_y = 1\n', "duplicate section"),
    (lambda t: t.replace("ny = 8", "ny = 8\nny = 8"), "duplicate key 'ny'"),
    (lambda t: "nx = 1\n" + t, "assignment before the first section"),
    (lambda t: t + "[features]\nmoving_window = maybe\n", "expected true or false"),
    (lambda t: t + "[diagnostics]\nfields = Bz, Jx\n", "unknown report field 'Jx'"),
    (lambda t: t + "garbage line\n", "cannot parse"),
])
def test_deck_errors(edit, fragment):
    with pytest.raises(DeckError) as err:
        parse_deck(edit(MINIMAL))
    assert fragment in str(err.value)


def test_all_deck_errors_reported():
    text = MINIMAL.replace("nx = 8", "nx = x").replace("ppc_y = 2", "ppc_z = 2")
    with pytest.raises(DeckError) as err:
        parse_deck(text)
    assert len(err.value.errors) >= 3


def test_comments_and_blank_lines():
    text = "# header\n" + MINIMAL.replace("nx = 8", "nx = 8  # cells")
    assert parse_deck(text)[0].nx == 8


def test_deck_fixpoint_minimal():
    cfg, diag = parse_deck(MINIMAL)
    text = render_deck(cfg, diag)
    assert render_deck(*parse_deck(text)) == text
    assert parse_deck(text) == (cfg, diag)


names = st.text("abcdefghijklmnopqrstuvwxyz_-0123456789", min_size=1, max_size=12)
pos = st.floats(1e-3, 1e3, allow_nan=False)
anyf = st.floats(-1e3, 1e3, allow_nan=False)


@st.composite
def configs(draw):
    tile_nx, tile_ny = draw(st.integers(2, 8)), draw(st.integers(2, 8))
    dx, dy = draw(pos), draw(pos)
    limit = 1.0 / (1.0 / dx**2 + 1.0 / dy**2) ** 0.5
    dt = limit * draw(st.floats(1e-3, 0.999))
    species = tuple(
        SpeciesSpec(n, draw(anyf.filter(lambda v: v != 0)), (draw(st.integers(1, 9)), draw(st.integers(1, 9))),
                    Vec3(draw(anyf), draw(anyf), draw(anyf)), Vec3(draw(anyf), draw(anyf), draw(anyf)),
                    draw(pos))
        for n in draw(st.lists(names, max_size=3, unique=True)))
    cfg = SimConfig(nx=tile_nx * draw(st.integers(1, 5)), ny=tile_ny * draw(st.integers(1, 5)),
                    dx=dx, dy=dy, dt=dt, n_steps=draw(st.integers(0, 10**6)), tile_nx=tile_nx,
                    tile_ny=tile_ny, guard=2, species=species,
                    filter_passes=draw(st.integers(0, 5)), moving_window=draw(st.booleans()),
                    seed=draw(st.integers(0, 2**64 - 1)), report_every=draw(st.integers(1, 100)))
    fields = tuple(draw(st.lists(st.sampled_from(["Ex", "Ey", "Ez", "Bx", "By", "Bz", "Bmag", "charge"]),
                                 min_size=1, max_size=4, unique=True)))
    return cfg, Diagnostics(fields)


@settings(max_examples=150, deadline=None)
@given(configs())
def test_deck_fixpoint_property(cd):
    cfg, diag = cd
    text = render_deck(cfg, diag)
    assert parse_deck(text) == (cfg, diag)
    assert render_deck(*parse_deck(text)) == text


def report(name="Bz", shape=(3, 4), rng=None):
    data = np.arange(np.prod(shape), dtype=float).reshape(shape) if rng is None \
        else rng.standard_normal(shape)
    return GridReport(name, 42, 2.94, 0.1, 0.2, data)


def test_report_unit_grid(tmp_path):
    r = GridReport("x", 0, 0.0, 1.0, 1.0, np.zeros((1, 1)))
    path = write_report(r, tmp_path / "a.tpic")
    assert path.stat().st_size == 60 + len("x")
    assert read_report(path).same_as(r)


def test_report_layout():
    r = report()
    b = to_bytes(r)
    assert b[:4] == b"TPIC"
    assert struct.unpack_from("<II", b, 4) == (1, 2)
    assert b[12:14] == b"Bz"
    assert struct.unpack_from("<QIIddd", b, 14) == (42, 4, 3, 0.1, 0.2, 2.94)
    payload = np.frombuffer(b[14 + 40:], "<f8")
    assert payload.tolist() == list(range(12))


def test_report_random_roundtrip(rng, tmp_path):
    r = report("charge-electrons", (16, 16), rng)
    back = read_report(write_report(r, tmp_path / "r.tpic"))
    assert back.same_as(r)
    assert back.data.tobytes() == r.data.tobytes()


@settings(max_examples=100)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=9),
                  elements=st.floats(allow_nan=False, allow_infinity=False)),
       st.text(max_size=10), st.integers(0, 2**64 - 1), st.floats(allow_nan=False))
def test_report_roundtrip_property(data, name, step, time):
    r = GridReport(name, step, time, 0.1, 0.1, data)
    assert from_bytes(to_bytes(r)).same_as(r)


def test_report_truncated():
    b = to_bytes(report())
    for cut in (3, 13, 30, len(b) - 1):
        with pytest.raises(TruncatedReportError):
            from_bytes(b[:cut])


def test_report_bad_magic_and_version():
    b = to_bytes(report())
    with pytest.raises(BadMagicError):
        from_bytes(b"XPIC" + b[4:])
    with pytest.raises(VersionMismatchError):
        from_bytes(b[:4] + struct.pack("<I", 2) + b[8:])
    with pytest.raises(ReportFormatError):
        from_bytes(b + b"\0")


def test_report_rejects_non_finite():
    with pytest.raises(ValueError):
        to_bytes(GridReport("a", 0, 0.0, 1.0, 1.0, np.array([[np.nan]])))


def test_report_csv():
    text = report_csv(report())
    lines = text.splitlines()
    assert lines[0] == "i,j,x,y,value"
    assert len(lines) == 1 + 12
    assert lines[1 + 4 + 2] == "2,1,0.2,0.2,6.0"


def test_preset_sizes():
    assert preset_config("cold", 1.0).nx == 500
    cold, _ = parse_deck(preset_deck("cold", 1.0))
    assert (cold.nx, cold.ny, cold.tile_nx) == (500, 500, 25)
    assert cold.species[0].u_fl == (0, 0, 0) and cold.species[0].u_th == (0, 0, 0)
    warm = preset_config("warm", 1.0)
    assert warm.species[0].u_th == (1.0, 1.0, 1.0)
    w = preset_config("weibel", 1.0)
    counts = [s.ppc[0] * s.ppc[1] * w.nx * w.ny for s in w.species]
    assert counts == [25_000_000, 25_000_000]
    assert sorted(s.m_over_q for s in w.species) == [-1.0, 1.0]
    assert w.species[0].u_fl.z == -w.species[1].u_fl.z != 0
    assert all(v > 0 for s in w.species for v in s.u_th)


def test_preset_scaled():
    cfg, _ = parse_deck(preset_deck("cold", 0.128))
    assert (cfg.nx, cfg.ny) == (64, 64)
    assert preset_config("weibel", 0.5).nx == 250


@pytest.mark.parametrize("name, scale", [("hot", 1.0), ("cold", 0.0), ("cold", 1.5)])
def test_preset_errors(name, scale):
    with pytest.raises(ValueError):
        preset_config(name, scale)


def write(tmp_path, text, name="deck.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", write(tmp_path, MINIMAL)]) == 0
    assert "ok: 8x8 cells" in capsys.readouterr().out


def test_cli_validate_courant(tmp_path, capsys):
    code = main(["validate", write(tmp_path, MINIMAL.replace("dt = 0.05", "dt = 0.09"))])
    assert code == 4
    assert "Courant limit 0.0707" in capsys.readouterr().err


def test_cli_deck_error(tmp_path, capsys):
    assert main(["validate", write(tmp_path, MINIMAL + "oops\n")]) == 3
    assert "line" in capsys.readouterr().err


def test_cli_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "none.txt")]) == 7


def test_cli_usage():
    assert main([]) == 2
    assert main(["preset", "hot"]) == 2


def test_cli_preset(capsys):
    assert main(["preset", "weibel", "--scale", "0.128"]) == 0
    out = capsys.readouterr().out
    assert parse_deck(out)[0] == preset_config("weibel", 0.128)


def test_cli_bad_threads(tmp_path):
    assert main(["run", write(tmp_path, MINIMAL), "--threads", "0"]) == 2


def test_cli_report_dump(tmp_path, capsys):
    path = write_report(report(), tmp_path / "r.tpic")
    assert main(["report-dump", str(path)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 1 + 12
    bad = tmp_path / "bad.tpic"
    bad.write_bytes(b"nope")
    assert main(["report-dump", str(bad)]) == 5


def test_cli_run_cold_preset(tmp_path, capsys):
    deck = preset_deck("cold", 0.128).replace("n_steps = 500", "n_steps = 100")
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, deck), "--out", str(out)]) == 0
    names = sorted(p.name for p in out.glob("*.tpic"))
    steps = ["000000", "000050", "000100"]
    assert names == sorted(f"{n}_{s}.tpic" for n in ("Bz", "Bmag", "charge-electrons") for s in steps)
    for p in out.glob("*.tpic"):
        r = read_report(p)
        assert (r.nx, r.ny) == (64, 64)
        assert main(["report-dump", str(p)]) == 0
    rows = (out / "energy.csv").read_text().splitlines()
    assert rows[0] == "step,time,field_e,field_b,kinetic" and len(rows) == 4
    assert (out / "energy.png").exists() and (out / "Bz_000100.png").exists()
    assert not read_report(out / "Bz_000100.tpic").data.any()


def test_cli_deterministic_threads_bitwise(tmp_path, monkeypatch):
    deck = write(tmp_path, MINIMAL.replace("n_steps = 4", "n_steps = 12") +
                 '[species "positrons"]\nm_over_q = 1\nppc_x = 2\nppc_y = 2\n'
                 "uth_x = 0.2\nuth_y = 0.2\nuth_z = 0.2\nufl_z = 0.3\n"
                 "[diagnostics]\nreport_every = 5\nfields = Ex, Bz, Bmag, charge\n")
    dirs = []
    for k in (1, 2, 3):
        d = tmp_path / f"k{k}"
        assert main(["run", deck, "--threads", str(k), "--deterministic", "--out", str(d),
                     "--no-figures"]) == 0
        dirs.append(d)
    monkeypatch.setenv("TPIC_THREADS", "4")
    d = tmp_path / "env"
    assert main(["run", deck, "--deterministic", "--out", str(d), "--no-figures"]) == 0
    dirs.append(d)
    files = sorted(p.name for p in dirs[0].glob("*.tpic"))
    # steps 0, 5, 10, 12 for Ex, Bz, Bmag and two charge densities
    assert len(files) == 4 * 5
    for other in dirs[1:]:
        assert sorted(p.name for p in other.glob("*.tpic")) == files
        for f in files:
            assert (other / f).read_bytes() == (dirs[0] / f).read_bytes()
    assert not list(dirs[0].glob("*.png"))
