"""Binary field files: magic NLSF, fixed-width little-endian, bit-exact.

Layout: magic ``NLSF`` | version u32 | N u32 | m u32 | n[axis] u32 each |
L[axis] f64 each | values f64 row-major (axis 0 slowest).
"""

import struct

import numpy as np

from .grid import Field, GridSpec

MAGIC = b"NLSF"
VERSION = 1


class FormatError(ValueError):
    pass


def write_field(path, u: Field) -> None:
    spec = u.spec
    header = struct.pack("<4sIII", MAGIC, VERSION, spec.total_dims,
                         spec.confined_dims)
    header += struct.pack(f"<{spec.total_dims}I", *spec.points_per_axis)
    header += struct.pack(f"<{spec.total_dims}d", *spec.half_widths)
    payload = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise FormatError(f"file too short for a header: {len(data)} bytes")
    magic, version, n_dims, m_dims = struct.unpack_from("<4sIII", data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}, "
                          f"expected {VERSION}")
    offset = 16
    need = offset + 4 * n_dims + 8 * n_dims
    if len(data) < need:
        raise FormatError(f"truncated header: expected at least {need} bytes, "
                          f"got {len(data)}")
    counts = struct.unpack_from(f"<{n_dims}I", data, offset)
    offset += 4 * n_dims
    widths = struct.unpack_from(f"<{n_dims}d", data, offset)
    offset += 8 * n_dims
    spec = GridSpec(n_dims, m_dims, tuple(widths), tuple(counts))
    expected = spec.size * 8
    actual = len(data) - offset
    if actual != expected:
        raise FormatError(f"payload length mismatch: header implies "
                          f"{expected} bytes of values, file has {actual}")
    values = np.frombuffer(data, dtype="<f8", offset=offset).astype(
        np.float64).reshape(spec.shape)
    return Field(spec, values)
