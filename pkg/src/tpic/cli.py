"""
Command-line entry point.

Exit codes:

    0  success
    2  bad command-line usage
    3  deck syntax or schema error
    4  deck violates a configuration invariant (e.g. the Courant limit)
    5  malformed report file
    6  the simulation failed
    7  file system error
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import engine
from .core import ConfigError, validate_config
from .io import (PRESETS, DeckError, GridReport, ReportFormatError, parse_deck, preset_deck,
                 read_report, report_csv, write_report)

log = logging.getLogger("tpic")

EXIT_OK, EXIT_USAGE, EXIT_DECK, EXIT_CONFIG, EXIT_REPORT, EXIT_SIM, EXIT_IO = 0, 2, 3, 4, 5, 6, 7


class DirectorySink:
    """Writes ``<name>_<step>.tpic`` reports, ``energy.csv`` and PNG figures."""

    def __init__(self, out: Path, figures: bool = True):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.figures = figures
        self.rows: list[dict] = []
        self.latest: dict[str, GridReport] = {}
        self.written: list[Path] = []

    def grid(self, name, step, time, data, dx, dy) -> None:
        r = GridReport(name, step, time, dx, dy, data)
        self.written.append(write_report(r, self.out / f"{name}_{step:06d}.tpic"))
        self.latest[name] = r

    def scalars(self, step, time, values) -> None:
        self.rows.append({"step": step, "time": time, **values})

    def close(self) -> None:
        if self.rows:
            with open(self.out / "energy.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(self.rows[0]))
                w.writeheader()
                w.writerows(self.rows)
        if self.figures:
            from .plotting import plot_energy, plot_report

            if self.rows:
                plot_energy(self.rows, self.out / "energy.png")
            for name, r in self.latest.items():
                plot_report(r, self.out / f"{name}_{r.step:06d}.png")


def _threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("TPIC_THREADS")
    return int(env) if env else 1


def cmd_run(args) -> int:
    cfg, diag = parse_deck(Path(args.deck).read_text())
    workers = _threads(args.threads)
    sink = DirectorySink(Path(args.out), figures=not args.no_figures)
    state = engine.SimState.initial(cfg)
    log.info("running %d steps on %dx%d cells with %d worker(s)%s", cfg.n_steps, cfg.nx, cfg.ny,
             workers, ", deterministic" if args.deterministic else "")
    engine.run(state, cfg.n_steps, [sink], workers=workers, deterministic=args.deterministic,
               fields=diag.fields)
    sink.close()
    print(f"wrote {len(sink.written)} reports to {sink.out}")
    return EXIT_OK


def cmd_preset(args) -> int:
    sys.stdout.write(preset_deck(args.name, args.scale))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg, _ = parse_deck(Path(args.deck).read_text())
    validate_config(cfg)
    n = sum(cfg.nx * cfg.ny * s.ppc[0] * s.ppc[1] for s in cfg.species)
    print(f"ok: {cfg.nx}x{cfg.ny} cells, {cfg.n_tiles} tiles, {len(cfg.species)} species, "
          f"{n} particles, {cfg.n_steps} steps")
    return EXIT_OK


def cmd_report_dump(args) -> int:
    sys.stdout.write(report_csv(read_report(args.file)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tpic", description="Tiled 2D electromagnetic PIC code.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a deck")
    r.add_argument("deck")
    r.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $TPIC_THREADS or 1)")
    r.add_argument("--deterministic", action="store_true",
                   help="merge tile currents in fixed order (bitwise reproducible)")
    r.add_argument("--out", default="tpic-out", help="output directory")
    r.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("preset", help="print a benchmark deck")
    s.add_argument("name", choices=PRESETS)
    s.add_argument("--scale", type=float, default=1.0)
    s.set_defaults(func=cmd_preset)

    v = sub.add_parser("validate", help="check a deck without running it")
    v.add_argument("deck")
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("report-dump", help="print a report file as CSV")
    d.add_argument("file")
    d.set_defaults(func=cmd_report_dump)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "threads", None) is not None and args.threads < 1:
            raise ValueError("--threads must be >= 1")
        return args.func(args)
    except DeckError as exc:
        print(f"error: invalid deck\n{exc}", file=sys.stderr)
        return EXIT_DECK
    except ConfigError as exc:
        print("error: invalid configuration", file=sys.stderr)
        for code, msg in exc.violations:
            print(f"  {code}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportFormatError as exc:
        print(f"error: bad report file: {exc}", file=sys.stderr)
        return EXIT_REPORT
    except engine.StepError as exc:
        print(f"error: simulation failed at {exc}", file=sys.stderr)
        return EXIT_SIM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
