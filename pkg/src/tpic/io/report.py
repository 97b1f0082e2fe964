"""
Binary grid reports.

Layout (all little-endian)::

    offset  size  field
    0       4     magic b"TPIC"
    4       4     format version, u32 (currently 1)
    8       4     name length in bytes, u32
    12      n     name, UTF-8
    12+n    8     step index, u64
    20+n    4     nx, u32
    24+n    4     ny, u32
    28+n    8     dx, f64
    36+n    8     dy, f64
    44+n    8     time, f64
    52+n    8*nx*ny  payload, f64, ny rows of nx values (x varies fastest)

Only interior cells are stored.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"TPIC"
VERSION = 1
_PREFIX = struct.Struct("<4sII")
_META = struct.Struct("<QIIddd")


class ReportFormatError(ValueError):
    pass


class BadMagicError(ReportFormatError):
    pass


class VersionMismatchError(ReportFormatError):
    pass


class TruncatedReportError(ReportFormatError):
    pass


@dataclass
class GridReport:
    name: str
    step: int
    time: float
    dx: float
    dy: float
    data: np.ndarray  # (ny, nx)

    @property
    def nx(self) -> int:
        return self.data.shape[1]

    @property
    def ny(self) -> int:
        return self.data.shape[0]

    def same_as(self, other: "GridReport") -> bool:
        """Bitwise equality, including the payload."""
        return (self.name == other.name and self.step == other.step
                and self.data.shape == other.data.shape
                and struct.pack("<3d", self.time, self.dx, self.dy)
                == struct.pack("<3d", other.time, other.dx, other.dy)
                and self.data.astype("<f8").tobytes() == other.data.astype("<f8").tobytes())


def to_bytes(r: GridReport) -> bytes:
    data = np.asarray(r.data, dtype="<f8")
    if data.ndim != 2:
        raise ValueError(f"report payload must be 2D, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"report {r.name!r} has non-finite values")
    name = r.name.encode("utf-8")
    ny, nx = data.shape
    return (_PREFIX.pack(MAGIC, VERSION, len(name)) + name
            + _META.pack(r.step, nx, ny, r.dx, r.dy, r.time)
            + np.ascontiguousarray(data).tobytes())


def from_bytes(buf: bytes) -> GridReport:
    if len(buf) < _PREFIX.size:
        raise TruncatedReportError(f"{len(buf)} bytes is too short for a report header")
    magic, version, nlen = _PREFIX.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionMismatchError(f"report format version {version}, this reader supports {VERSION}")
    pos = _PREFIX.size
    if len(buf) < pos + nlen + _META.size:
        raise TruncatedReportError("report header is truncated")
    try:
        name = buf[pos:pos + nlen].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ReportFormatError(f"report name is not valid UTF-8: {exc}") from None
    pos += nlen
    step, nx, ny, dx, dy, time = _META.unpack_from(buf, pos)
    pos += _META.size
    need = 8 * nx * ny
    if len(buf) - pos < need:
        raise TruncatedReportError(f"payload has {len(buf) - pos} bytes, expected {need}")
    if len(buf) - pos > need:
        raise ReportFormatError(f"{len(buf) - pos - need} trailing bytes after the payload")
    data = np.frombuffer(buf, dtype="<f8", count=nx * ny, offset=pos).reshape(ny, nx).astype(np.float64)
    return GridReport(name, step, time, dx, dy, data)


def write_report(r: GridReport, path) -> Path:
    path = Path(path)
    path.write_bytes(to_bytes(r))
    return path


def read_report(path) -> GridReport:
    return from_bytes(Path(path).read_bytes())


def report_csv(r: GridReport) -> str:
    """CSV with one row per cell: i, j, x, y, value."""
    rows = ["i,j,x,y,value"]
    for j in range(r.ny):
        for i in range(r.nx):
            rows.append(f"{i},{j},{i * r.dx!r},{j * r.dy!r},{float(r.data[j, i])!r}")
    return "\n".join(rows) + "\n"
