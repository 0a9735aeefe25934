"""Binary containers for activation matrices and rotation matrices.

DFAT holds one rows x cols float matrix:

    magic 'DFAT' | u32 version = 1 | u32 dtype (0 = f32, 1 = f64)
    | u64 rows | u64 cols | payload, row-major little-endian

DFRM is the same layout specialized to square rotation matrices (magic
'DFRM', a single u64 dim).  DFBX bundles several named DFAT blobs behind
a JSON index for toy-network weights.  Bad magic, truncation and version
mismatch raise distinct error types so the CLI can report them apart.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    DataError,
    FormatVersionError,
    ShapeError,
    TruncatedFileError,
)
from .rotations import ORTHO_TOL_F32, ORTHO_TOL_F64, RotationMatrix

DFAT_MAGIC = b"DFAT"
DFRM_MAGIC = b"DFRM"
DFBX_MAGIC = b"DFBX"
VERSION = 1

_DTYPE_CODES = {"f32": 0, "f64": 1}
_CODE_DTYPES = {0: ("f32", "<f4"), 1: ("f64", "<f8")}


@dataclass
class TokenMatrix:
    """Activation matrix plus storage dtype tag and origin note."""

    values: np.ndarray
    dtype: str = "f64"
    provenance: str = ""

    @property
    def rows(self):
        return int(self.values.shape[0])

    @property
    def cols(self):
        return int(self.values.shape[1])

    def as_f64(self):
        return np.ascontiguousarray(self.values, dtype=np.float64)


def _dtype_code(dtype):
    if dtype not in _DTYPE_CODES:
        raise DataError(f"unsupported dtype tag {dtype!r}; use 'f32' or 'f64'")
    return _DTYPE_CODES[dtype]


def _take(buf, n, path, what):
    if len(buf) < n:
        raise TruncatedFileError(f"{path}: truncated while reading {what}")
    return buf[:n], buf[n:]


def _read_header(buf, magic, path):
    head, buf = _take(buf, 4, path, "magic")
    if head != magic:
        raise BadMagicError(f"{path}: expected magic {magic!r}, found {head!r}")
    raw, buf = _take(buf, 8, path, "header")
    version, code = struct.unpack("<II", raw)
    if version != VERSION:
        raise FormatVersionError(f"{path}: container version {version}, expected {VERSION}")
    if code not in _CODE_DTYPES:
        raise DataError(f"{path}: unknown dtype code {code}")
    return buf, code


def _read_payload(buf, code, count, path):
    tag, np_dtype = _CODE_DTYPES[code]
    nbytes = count * np.dtype(np_dtype).itemsize
    if len(buf) < nbytes:
        raise TruncatedFileError(
            f"{path}: payload holds {len(buf)} bytes, header declares {nbytes}"
        )
    if len(buf) > nbytes:
        raise DataError(f"{path}: {len(buf) - nbytes} trailing bytes after payload")
    return tag, np.frombuffer(buf[:nbytes], dtype=np_dtype)


def write_dfat(path, matrix, dtype=None):
    """Write a TokenMatrix (or raw 2-D array) to a DFAT file."""
    if isinstance(matrix, TokenMatrix):
        values, tag = matrix.values, dtype or matrix.dtype
    else:
        values, tag = np.asarray(matrix), dtype or "f64"
    if values.ndim != 2:
        raise ShapeError(f"DFAT stores 2-D matrices, got ndim {values.ndim}")
    code = _dtype_code(tag)
    np_dtype = _CODE_DTYPES[code][1]
    header = struct.pack(
        "<4sIIQQ", DFAT_MAGIC, VERSION, code, values.shape[0], values.shape[1]
    )
    payload = np.ascontiguousarray(values, dtype=np_dtype).tobytes()
    Path(path).write_bytes(header + payload)


def read_dfat(path):
    buf = Path(path).read_bytes()
    buf, code = _read_header(buf, DFAT_MAGIC, path)
    raw, buf = _take(buf, 16, path, "dimensions")
    rows, cols = struct.unpack("<QQ", raw)
    tag, flat = _read_payload(buf, code, rows * cols, path)
    values = flat.reshape(rows, cols).copy()
    return TokenMatrix(values=values, dtype=tag, provenance=str(path))


def write_dfrm(path, rotation, dtype="f64"):
    """Write a RotationMatrix (or raw square array) to a DFRM file."""
    entries = np.asarray(getattr(rotation, "entries", rotation))
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ShapeError(f"DFRM stores square matrices, got shape {entries.shape}")
    code = _dtype_code(dtype)
    np_dtype = _CODE_DTYPES[code][1]
    header = struct.pack("<4sIIQ", DFRM_MAGIC, VERSION, code, entries.shape[0])
    payload = np.ascontiguousarray(entries, dtype=np_dtype).tobytes()
    Path(path).write_bytes(header + payload)


def read_dfrm(path, validate=True):
    """Load a rotation; orthogonality is checked at the stored precision."""
    buf = Path(path).read_bytes()
    buf, code = _read_header(buf, DFRM_MAGIC, path)
    raw, buf = _take(buf, 8, path, "dimension")
    (dim,) = struct.unpack("<Q", raw)
    tag, flat = _read_payload(buf, code, dim * dim, path)
    rot = RotationMatrix.from_entries(flat.reshape(dim, dim), "loaded")
    if validate:
        rot.validate(ORTHO_TOL_F32 if tag == "f32" else ORTHO_TOL_F64)
    return rot


def write_bundle(path, named, dtype="f64"):
    """Write named matrices as concatenated DFAT blobs behind a JSON index."""
    code = _dtype_code(dtype)
    np_dtype = _CODE_DTYPES[code][1]
    blobs, offsets, offset = [], {}, 0
    for name in sorted(named):
        values = np.asarray(named[name])
        header = struct.pack(
            "<4sIIQQ", DFAT_MAGIC, VERSION, code, values.shape[0], values.shape[1]
        )
        blob = header + np.ascontiguousarray(values, dtype=np_dtype).tobytes()
        offsets[name] = offset
        offset += len(blob)
        blobs.append(blob)
    index = json.dumps(offsets, sort_keys=True, separators=(",", ":")).encode()
    head = struct.pack("<4sII", DFBX_MAGIC, VERSION, len(index))
    Path(path).write_bytes(head + index + b"".join(blobs))


def read_bundle(path):
    buf = Path(path).read_bytes()
    head, buf = _take(buf, 4, path, "magic")
    if head != DFBX_MAGIC:
        raise BadMagicError(f"{path}: expected magic {DFBX_MAGIC!r}, found {head!r}")
    raw, buf = _take(buf, 8, path, "header")
    version, index_len = struct.unpack("<II", raw)
    if version != VERSION:
        raise FormatVersionError(f"{path}: container version {version}, expected {VERSION}")
    raw, buf = _take(buf, index_len, path, "index")
    try:
        offsets = json.loads(raw.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed bundle index: {exc}") from exc
    out = {}
    names = sorted(offsets, key=lambda n: offsets[n])
    for i, name in enumerate(names):
        start = offsets[name]
        end = offsets[names[i + 1]] if i + 1 < len(names) else len(buf)
        section, code = _read_header(buf[start:end], DFAT_MAGIC, f"{path}:{name}")
        raw, section = _take(section, 16, f"{path}:{name}", "dimensions")
        rows, cols = struct.unpack("<QQ", raw)
        _, flat = _read_payload(section, code, rows * cols, f"{path}:{name}")
        out[name] = flat.reshape(rows, cols).copy()
    return out
