"""DFAT/DFRM/DFBX container round-trips and corruption handling."""

import hashlib
import struct
from pathlib import Path

import numpy as np
import pytest

from rotquant.errors import (
    BadMagicError,
    DataError,
    FormatVersionError,
    NotOrthogonalError,
    ShapeError,
    TruncatedFileError,
)
from rotquant.rotations import orthogonal_random
from rotquant.storage import (
    DFAT_MAGIC,
    DFBX_MAGIC,
    VERSION,
    TokenMatrix,
    read_bundle,
    read_dfat,
    read_dfrm,
    write_bundle,
    write_dfat,
    write_dfrm,
)
from rotquant.synth import generate

GOLDEN = Path(__file__).parent / "data" / "golden_synth_seed0.dfat"
GOLDEN_SHA = "f7de89b510fde1c6e8899913820302b96e1f73b76f85b413617e1990e76f847b"


def test_dfat_round_trip_f64(tmp_path):
    rng = np.random.default_rng(3)
    x = rng.normal(size=(17, 5))
    path = tmp_path / "a.dfat"
    write_dfat(path, x)
    back = read_dfat(path)
    assert back.dtype == "f64"
    assert back.rows == 17 and back.cols == 5
    assert np.array_equal(back.values, x)
    assert back.provenance == str(path)


def test_dfat_round_trip_f32_stores_at_reduced_precision(tmp_path):
    rng = np.random.default_rng(4)
    x = rng.normal(size=(9, 9))
    path = tmp_path / "a.dfat"
    write_dfat(path, TokenMatrix(values=x, dtype="f32"))
    back = read_dfat(path)
    assert back.dtype == "f32"
    assert np.array_equal(back.values, x.astype("<f4"))
    # explicit dtype= overrides the matrix tag
    write_dfat(path, TokenMatrix(values=x, dtype="f32"), dtype="f64")
    assert np.array_equal(read_dfat(path).values, x)


def test_dfat_rejects_non_2d(tmp_path):
    with pytest.raises(ShapeError):
        write_dfat(tmp_path / "a.dfat", np.zeros(4))


def test_dfat_rejects_unknown_dtype_tag(tmp_path):
    with pytest.raises(DataError):
        write_dfat(tmp_path / "a.dfat", np.zeros((2, 2)), dtype="f16")


def test_golden_file_hash_and_content():
    data = GOLDEN.read_bytes()
    assert hashlib.sha256(data).hexdigest() == GOLDEN_SHA
    back = read_dfat(GOLDEN)
    fresh, _ = generate()
    assert np.array_equal(back.values, fresh.values.astype("<f4"))


def test_bad_magic_is_distinct(tmp_path):
    path = tmp_path / "a.dfat"
    path.write_bytes(b"XXXX" + b"\x00" * 40)
    with pytest.raises(BadMagicError):
        read_dfat(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "a.dfat"
    path.write_bytes(b"DF")
    with pytest.raises(TruncatedFileError):
        read_dfat(path)


def test_version_mismatch(tmp_path):
    path = tmp_path / "a.dfat"
    path.write_bytes(struct.pack("<4sIIQQ", DFAT_MAGIC, VERSION + 1, 1, 1, 1) + b"\x00" * 8)
    with pytest.raises(FormatVersionError):
        read_dfat(path)


def test_unknown_dtype_code(tmp_path):
    path = tmp_path / "a.dfat"
    path.write_bytes(struct.pack("<4sIIQQ", DFAT_MAGIC, VERSION, 7, 1, 1) + b"\x00" * 8)
    with pytest.raises(DataError):
        read_dfat(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "a.dfat"
    write_dfat(path, np.ones((4, 4)))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(TruncatedFileError):
        read_dfat(path)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "a.dfat"
    write_dfat(path, np.ones((4, 4)))
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(DataError):
        read_dfat(path)


def test_dfrm_round_trip(tmp_path):
    rot = orthogonal_random(8, seed=11)
    path = tmp_path / "r.dfrm"
    write_dfrm(path, rot)
    back = read_dfrm(path)
    assert back.kind == "loaded"
    assert np.array_equal(back.entries, rot.entries)


def test_dfrm_f32_validates_at_stored_precision(tmp_path):
    rot = orthogonal_random(16, seed=12)
    path = tmp_path / "r.dfrm"
    write_dfrm(path, rot, dtype="f32")
    back = read_dfrm(path)
    assert np.array_equal(back.entries, rot.entries.astype("<f4").astype(np.float64))


def test_dfrm_rejects_non_orthogonal_unless_told_not_to(tmp_path):
    path = tmp_path / "r.dfrm"
    write_dfrm(path, np.eye(4) * 2.0)
    with pytest.raises(NotOrthogonalError):
        read_dfrm(path)
    back = read_dfrm(path, validate=False)
    assert np.array_equal(back.entries, np.eye(4) * 2.0)


def test_dfrm_rejects_rectangular(tmp_path):
    with pytest.raises(ShapeError):
        write_dfrm(tmp_path / "r.dfrm", np.zeros((3, 4)))


def test_dfrm_bad_magic(tmp_path):
    path = tmp_path / "r.dfrm"
    write_dfat(path, np.eye(2))
    with pytest.raises(BadMagicError):
        read_dfrm(path)


def test_bundle_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    named = {
        "w_q": rng.normal(size=(6, 6)),
        "w_up": rng.normal(size=(6, 12)),
        "bias": rng.normal(size=(1, 6)),
    }
    path = tmp_path / "w.dfbx"
    write_bundle(path, named)
    back = read_bundle(path)
    assert sorted(back) == sorted(named)
    for name in named:
        assert np.array_equal(back[name], named[name])


def test_bundle_bad_magic(tmp_path):
    path = tmp_path / "w.dfbx"
    path.write_bytes(b"ZZZZ" + b"\x00" * 16)
    with pytest.raises(BadMagicError):
        read_bundle(path)


def test_bundle_malformed_index(tmp_path):
    path = tmp_path / "w.dfbx"
    index = b"{not json"
    path.write_bytes(struct.pack("<4sII", DFBX_MAGIC, VERSION, len(index)) + index)
    with pytest.raises(DataError):
        read_bundle(path)


def test_bundle_truncated_index(tmp_path):
    path = tmp_path / "w.dfbx"
    path.write_bytes(struct.pack("<4sII", DFBX_MAGIC, VERSION, 64) + b"{}")
    with pytest.raises(TruncatedFileError):
        read_bundle(path)
