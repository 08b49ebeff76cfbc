"""Binary field persistence and CSV slicing.

Field files are little-endian throughout: magic 'PSIF', u32 version (1), u8
payload dtype (0 real float64, 1 complex128 with interleaved re/im), u8 rank,
two reserved zero bytes, then per axis a u8 name length, the UTF-8 name, u64
sample count and f64 min/max, followed by the row-major payload. Values round
trip bit exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import AxisGrid, ComplexField, RealField, ValidationError, make_axis

__all__ = [
    "FieldFormatError",
    "write_field",
    "read_field",
    "parse_slice_spec",
    "export_csv",
]

MAGIC = b"PSIF"
VERSION = 1

_HEADER = struct.Struct("<4sIBB2s")
_AXIS_FIXED = struct.Struct("<Qdd")


class FieldFormatError(OSError):
    """The bytes on disk are not a valid field file."""


def write_field(field, path):
    """Serialize a RealField or ComplexField; overwrites an existing file."""
    if isinstance(field, ComplexField):
        dtype_code, cast = 1, "<c16"
    elif isinstance(field, RealField):
        dtype_code, cast = 0, "<f8"
    else:
        raise ValidationError(f"cannot serialize {type(field)!r}")
    blob = [_HEADER.pack(MAGIC, VERSION, dtype_code, field.rank, b"\x00\x00")]
    for a in field.axes:
        name = a.name.encode("utf-8")
        blob.append(struct.pack("<B", len(name)))
        blob.append(name)
        blob.append(_AXIS_FIXED.pack(a.n, a.min, a.max))
    blob.append(np.ascontiguousarray(field.data).astype(cast, copy=False).tobytes())
    Path(path).write_bytes(b"".join(blob))


def _take(buf: bytes, offset: int, size: int, what: str):
    if offset + size > len(buf):
        raise FieldFormatError(f"truncated field file while reading {what}")
    return buf[offset : offset + size], offset + size


def read_field(path):
    """Deserialize a field file; raises FieldFormatError on malformed bytes."""
    buf = Path(path).read_bytes()
    raw, off = _take(buf, 0, _HEADER.size, "header")
    magic, version, dtype_code, rank, reserved = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}, not a field file")
    if version != VERSION:
        raise FieldFormatError(f"unsupported field file version {version}")
    if dtype_code not in (0, 1):
        raise FieldFormatError(f"unknown payload dtype code {dtype_code}")
    if reserved != b"\x00\x00":
        raise FieldFormatError("reserved header bytes are not zero")
    if not 1 <= rank <= 4:
        raise FieldFormatError(f"rank {rank} outside [1, 4]")
    axes = []
    for _ in range(rank):
        raw, off = _take(buf, off, 1, "axis name length")
        (name_len,) = struct.unpack("<B", raw)
        raw, off = _take(buf, off, name_len, "axis name")
        try:
            name = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FieldFormatError(f"axis name is not UTF-8: {exc}") from exc
        raw, off = _take(buf, off, _AXIS_FIXED.size, "axis bounds")
        n, lo, hi = _AXIS_FIXED.unpack(raw)
        try:
            axes.append(make_axis(name, lo, hi, n))
        except ValidationError as exc:
            raise FieldFormatError(f"invalid axis in field file: {exc}") from exc
    count = 1
    for a in axes:
        count *= a.n
    itemsize = 16 if dtype_code else 8
    raw, off = _take(buf, off, count * itemsize, "payload")
    if off != len(buf):
        raise FieldFormatError(f"{len(buf) - off} trailing bytes after payload")
    shape = tuple(a.n for a in axes)
    if dtype_code:
        data = np.frombuffer(raw, dtype="<c16").reshape(shape)
        return ComplexField(axes, data)
    data = np.frombuffer(raw, dtype="<f8").reshape(shape)
    return RealField(axes, data)


# ---------------------------------------------------------------------------
# CSV slices

def parse_slice_spec(spec: str) -> dict[str, float]:
    """Parse 'axis=value,axis=value' into an ordered mapping."""
    out: dict[str, float] = {}
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ValidationError(f"slice entry {chunk!r} is not axis=value")
        name, _, val = chunk.partition("=")
        name = name.strip()
        if name in out:
            raise ValidationError(f"axis {name!r} pinned twice in slice spec")
        try:
            out[name] = float(val)
        except ValueError as exc:
            raise ValidationError(f"slice entry {chunk!r}: {exc}") from exc
    return out


def export_csv(field, pins: dict[str, float], path) -> dict[str, float]:
    """Write a 1-d or 2-d slice as CSV with 17 significant digits.

    Pinned axes snap to the nearest grid node (ties toward -inf). The header
    names the free axes then 'value'; rows walk the outer free axis ascending
    with the inner axis fastest. Returns the snapped pin values actually used.
    Complex fields are rejected; export a derived real field instead.
    """
    if isinstance(field, ComplexField):
        raise ValidationError("CSV export handles real fields only")
    if not isinstance(field, RealField):
        raise ValidationError(f"cannot export {type(field)!r}")
    names = [a.name for a in field.axes]
    for name in pins:
        if name not in names:
            raise ValidationError(f"slice pins unknown axis {name!r}; field axes are {names}")
    free = [a for a in field.axes if a.name not in pins]
    if len(free) not in (1, 2):
        raise ValidationError(f"slice must leave 1 or 2 free axes, got {len(free)}")
    index: list[object] = []
    snapped: dict[str, float] = {}
    for a in field.axes:
        if a.name in pins:
            i = a.nearest_index(pins[a.name])
            index.append(i)
            snapped[a.name] = a.min + i * a.step
        else:
            index.append(slice(None))
    block = field.data[tuple(index)]
    lines = [",".join([a.name for a in free] + ["value"])]
    if len(free) == 1:
        for t, val in zip(free[0].points(), block):
            lines.append(f"{t:.17g},{val:.17g}")
    else:
        outer, inner = free[0].points(), free[1].points()
        for i, ti in enumerate(outer):
            for j, tj in enumerate(inner):
                lines.append(f"{ti:.17g},{tj:.17g},{block[i, j]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return snapped
