"""Construction and validation of orthogonal rotation matrices.

Two seeded constructions are provided: randomized Hadamard matrices
(deterministic +-1 pattern with random diagonal signs, every entry of
magnitude 1/sqrt(C)) and Haar-distributed random orthogonal matrices
(sign-fixed QR of a Gaussian draw).  `enforce_rotation` flips the last
column to push det = -1 matrices onto det = +1 without touching
orthogonality.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotOrthogonalError, ShapeError, UnsupportedDimensionError

KINDS = ("hadamard_randomized", "orthogonal_random", "optimized", "identity", "loaded")

# default infinity-norm tolerance on R R^T - I, per storage precision
ORTHO_TOL_F64 = 1e-10
ORTHO_TOL_F32 = 1e-5


@dataclass
class RotationMatrix:
    """Square orthogonal matrix plus provenance bookkeeping."""

    dim: int
    entries: np.ndarray
    kind: str
    det_sign: int

    @classmethod
    def from_entries(cls, entries, kind):
        entries = np.ascontiguousarray(entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ShapeError(f"rotation must be square, got shape {entries.shape}")
        if kind not in KINDS:
            raise ValueError(f"unknown rotation kind {kind!r}")
        sign, _ = np.linalg.slogdet(entries)
        return cls(dim=entries.shape[0], entries=entries, kind=kind, det_sign=int(sign))

    def validate(self, tol=ORTHO_TOL_F64):
        """Raise NotOrthogonalError unless ||R R^T - I||_inf <= tol."""
        if not np.isfinite(self.entries).all():
            raise NotOrthogonalError("rotation contains non-finite entries")
        gram = self.entries @ self.entries.T
        dev = np.abs(gram - np.eye(self.dim)).max()
        if dev > tol:
            raise NotOrthogonalError(
                f"orthogonality deviation {dev:.3e} exceeds tolerance {tol:.1e}"
            )
        return dev


def identity_rotation(dim):
    return RotationMatrix(dim=dim, entries=np.eye(dim), kind="identity", det_sign=1)


def _sylvester(order):
    """Hadamard matrix of the given power-of-two order by doubling."""
    h = np.ones((1, 1))
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def _paley(p):
    """Hadamard matrix of order p + 1 for a prime p = 3 (mod 4).

    H = [[1, 1], [-1, Q + I]] with Q the Jacobsthal matrix
    Q[i, j] = chi(j - i), chi the quadratic character mod p.
    """
    residues = {(a * a) % p for a in range(1, p)}
    chi = np.zeros(p)
    for k in range(1, p):
        chi[k] = 1.0 if k in residues else -1.0
    idx = np.arange(p)
    q = chi[(idx[None, :] - idx[:, None]) % p]
    h = np.ones((p + 1, p + 1))
    h[1:, 0] = -1.0
    h[1:, 1:] = q + np.eye(p)
    return h


def hadamard_matrix(dim):
    """Plain +-1 Hadamard matrix, or UnsupportedDimensionError.

    Supported dims factor as 2^k, 2^k * 12 or 2^k * 20 (Sylvester doubling
    on a Paley block for the latter two).
    """
    if dim < 1:
        raise UnsupportedDimensionError(f"dimension must be positive, got {dim}")
    rest, two_power = dim, 1
    while rest % 2 == 0:
        rest //= 2
        two_power *= 2
    if rest == 1:
        return _sylvester(dim)
    if rest == 3 and two_power >= 4:
        return np.kron(_sylvester(dim // 12), _paley(11))
    if rest == 5 and two_power >= 4:
        return np.kron(_sylvester(dim // 20), _paley(19))
    raise UnsupportedDimensionError(
        f"no Hadamard construction for dim {dim}; need 2^k, 2^k*12 or 2^k*20"
    )


def hadamard_randomized(dim, seed):
    """Randomized Hadamard rotation (1/sqrt(dim)) H diag(d), d random +-1."""
    h = hadamard_matrix(dim)
    rng = np.random.default_rng(seed)
    d = rng.integers(0, 2, size=dim) * 2.0 - 1.0
    entries = (h * d) / np.sqrt(dim)
    return RotationMatrix.from_entries(entries, "hadamard_randomized")


def orthogonal_random(dim, seed):
    """Haar-distributed orthogonal matrix from sign-fixed QR of a Gaussian."""
    if dim < 1:
        raise UnsupportedDimensionError(f"dimension must be positive, got {dim}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    # without the sign fix the QR convention biases the distribution
    d = np.sign(np.diag(r))
    d[d == 0.0] = 1.0
    return RotationMatrix.from_entries(q * d, "orthogonal_random")


def enforce_rotation(rot, tol=ORTHO_TOL_F64):
    """Return a det = +1 version of an orthogonal matrix.

    det = -1 inputs get their last column negated (fixed convention);
    det = +1 inputs pass through unchanged.  Non-orthogonal input raises.
    """
    rot.validate(tol)
    if rot.det_sign >= 0:
        return rot
    entries = rot.entries.copy()
    entries[:, -1] *= -1.0
    return RotationMatrix(dim=rot.dim, entries=entries, kind=rot.kind, det_sign=1)
