import numpy as np
import pytest

from rotquant import (
    NotOrthogonalError,
    RotationMatrix,
    ShapeError,
    UnsupportedDimensionError,
    enforce_rotation,
    hadamard_matrix,
    hadamard_randomized,
    identity_rotation,
    orthogonal_random,
)
from rotquant.rotations import ORTHO_TOL_F64

SUPPORTED_DIMS = [1, 2, 4, 8, 12, 16, 20, 24, 40, 48, 64, 80, 96, 160, 256]
UNSUPPORTED_DIMS = [3, 5, 6, 7, 9, 10, 13, 28, 36, 44, 52, 60]


@pytest.mark.parametrize("dim", SUPPORTED_DIMS)
def test_hadamard_is_hadamard(dim):
    h = hadamard_matrix(dim)
    assert h.shape == (dim, dim)
    assert np.all(np.abs(h) == 1.0)
    assert np.array_equal(h @ h.T, dim * np.eye(dim))


@pytest.mark.parametrize("dim", UNSUPPORTED_DIMS)
def test_hadamard_unsupported_dims(dim):
    with pytest.raises(UnsupportedDimensionError):
        hadamard_matrix(dim)


def test_hadamard_rejects_nonpositive():
    with pytest.raises(UnsupportedDimensionError):
        hadamard_matrix(0)


@pytest.mark.parametrize("dim", [1, 2, 8, 12, 20, 24, 64, 160, 1024])
def test_hadamard_randomized_orthogonal(dim):
    rot = hadamard_randomized(dim, seed=11)
    assert rot.kind == "hadamard_randomized"
    assert rot.validate() <= ORTHO_TOL_F64
    assert np.all(np.abs(np.abs(rot.entries) - 1.0 / np.sqrt(dim)) < 1e-15)


def test_hadamard_randomized_deterministic():
    a = hadamard_randomized(64, seed=5)
    b = hadamard_randomized(64, seed=5)
    c = hadamard_randomized(64, seed=6)
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, c.entries)


@pytest.mark.parametrize("dim", [2, 16, 64])
def test_sylvester_involution_up_to_signs(dim):
    # sign pattern is H diag(d); for the symmetric Sylvester pattern
    # H^2 = C I, so squaring after stripping d gives C I exactly
    rot = hadamard_randomized(dim, seed=3)
    signs = np.sign(rot.entries)
    d = signs[0, :].copy()  # first Sylvester row is all ones, so row 0 = d
    h = signs * d
    assert np.array_equal(h @ h, dim * np.eye(dim))


@pytest.mark.parametrize("dim", [1, 2, 8, 64, 256])
def test_orthogonal_random(dim):
    rot = orthogonal_random(dim, seed=0)
    assert rot.kind == "orthogonal_random"
    assert rot.validate() <= ORTHO_TOL_F64
    assert rot.det_sign in (-1, 1)
    again = orthogonal_random(dim, seed=0)
    assert np.array_equal(rot.entries, again.entries)


def test_orthogonal_random_varies_with_seed():
    a = orthogonal_random(16, seed=1)
    b = orthogonal_random(16, seed=2)
    assert not np.array_equal(a.entries, b.entries)


def test_identity_rotation():
    rot = identity_rotation(5)
    assert rot.det_sign == 1
    assert np.array_equal(rot.entries, np.eye(5))


def test_from_entries_rejects_nonsquare():
    with pytest.raises(ShapeError):
        RotationMatrix.from_entries(np.zeros((2, 3)), "loaded")


def test_from_entries_rejects_unknown_kind():
    with pytest.raises(ValueError):
        RotationMatrix.from_entries(np.eye(2), "mystery")


def test_validate_rejects_nonorthogonal():
    rot = RotationMatrix.from_entries(np.eye(3) * 1.5, "loaded")
    with pytest.raises(NotOrthogonalError):
        rot.validate()


def test_validate_rejects_nan():
    bad = np.eye(3)
    bad[1, 1] = np.nan
    rot = RotationMatrix(dim=3, entries=bad, kind="loaded", det_sign=1)
    with pytest.raises(NotOrthogonalError):
        rot.validate()


def test_enforce_rotation_flips_last_column():
    refl = np.eye(4)
    refl[2, 2] = -1.0  # determinant -1
    rot = RotationMatrix.from_entries(refl, "loaded")
    assert rot.det_sign == -1
    fixed = enforce_rotation(rot)
    assert fixed.det_sign == 1
    assert np.linalg.det(fixed.entries) == pytest.approx(1.0)
    assert np.array_equal(fixed.entries[:, :-1], rot.entries[:, :-1])
    assert np.array_equal(fixed.entries[:, -1], -rot.entries[:, -1])


def test_enforce_rotation_passthrough():
    rot = identity_rotation(3)
    assert enforce_rotation(rot) is rot


def test_enforce_rotation_requires_orthogonal():
    rot = RotationMatrix.from_entries(np.eye(3) * 2.0, "loaded")
    with pytest.raises(NotOrthogonalError):
        enforce_rotation(rot)


@pytest.mark.parametrize("dim", [12, 20, 24, 40])
def test_paley_based_dims_still_rotate(dim):
    # Paley blocks are not symmetric, so no involution claim here; the
    # rotation contract (orthogonality, magnitude, determinism) is enough
    rot = hadamard_randomized(dim, seed=9)
    assert rot.validate() <= ORTHO_TOL_F64
    assert np.array_equal(rot.entries, hadamard_randomized(dim, seed=9).entries)
