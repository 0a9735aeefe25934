"""Toy pre-norm transformer block for computational-invariance checks.

The block is attention plus a gated FFN around an RMSNorm that divides
each row by its L2 norm (no learnable scale).  Because row norms are
rotation-invariant, rmsnorm(X R) = rmsnorm(X) R, so folding a rotation
into the weights (R^T on inputs of each linear, R on outputs feeding the
residual stream) reproduces the unrotated outputs exactly in the rotated
basis.  Optional per-token quantization in front of every linear turns
the harness into a drift study instead of an exact identity.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInputError, ShapeError
from .storage import read_bundle, write_bundle


@dataclass
class ToyBlockWeights:
    """One block's matrices; lm_head rides along for the output identity."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    w_gate: np.ndarray
    w_up: np.ndarray
    w_down: np.ndarray
    w_lm_head: np.ndarray

    @property
    def dim(self):
        return int(self.w_q.shape[0])

    @property
    def hidden(self):
        return int(self.w_up.shape[1])

    def to_bundle(self, path):
        write_bundle(path, self.__dict__)

    @classmethod
    def from_bundle(cls, path):
        named = read_bundle(path)
        try:
            return cls(**{k: named[k] for k in cls.__dataclass_fields__})
        except KeyError as exc:
            raise ShapeError(f"bundle is missing weight section {exc}") from exc


def random_weights(dim, hidden, vocab=None, seed=0):
    """Gaussian toy weights scaled by 1/sqrt(fan_in)."""
    vocab = vocab or 2 * dim
    rng = np.random.default_rng(seed)

    def draw(rows, cols):
        return rng.standard_normal((rows, cols)) / np.sqrt(rows)

    return ToyBlockWeights(
        w_q=draw(dim, dim),
        w_k=draw(dim, dim),
        w_v=draw(dim, dim),
        w_o=draw(dim, dim),
        w_gate=draw(dim, hidden),
        w_up=draw(dim, hidden),
        w_down=draw(hidden, dim),
        w_lm_head=draw(dim, vocab),
    )


def rmsnorm(x):
    """Divide each row by its L2 norm; zero rows are degenerate."""
    arr = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(arr, axis=-1, keepdims=True)
    if (norms == 0.0).any():
        raise DegenerateInputError("rmsnorm input has a zero-norm row")
    return arr / norms


def _silu(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = x[pos] / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = x[~pos] * ex / (1.0 + ex)
    return out


def _softmax_rows(scores):
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def fold_rotation(weights, rotation):
    """Fold a rotation into the block: R^T ahead of inputs, R behind outputs."""
    r = np.asarray(getattr(rotation, "entries", rotation), dtype=np.float64)
    if r.shape != (weights.dim, weights.dim):
        raise ShapeError(f"rotation shape {r.shape} does not match block dim {weights.dim}")
    rt = r.T
    return ToyBlockWeights(
        w_q=rt @ weights.w_q,
        w_k=rt @ weights.w_k,
        w_v=rt @ weights.w_v,
        w_o=weights.w_o @ r,
        w_gate=rt @ weights.w_gate,
        w_up=rt @ weights.w_up,
        w_down=weights.w_down @ r,
        w_lm_head=rt @ weights.w_lm_head,
    )


def block_forward(x, weights, rotated_residual=False, quant=None):
    """Pre-norm attention + gated FFN with residuals.

    rotated_residual only documents that the caller's residual stream
    (and the weights) live in a rotated basis; the arithmetic is
    basis-independent, which is exactly the invariance under test.
    quant, when given, quantize-dequantizes the activations entering
    every linear.
    """
    del rotated_residual
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != weights.dim:
        raise ShapeError(f"input shape {x.shape} does not match block dim {weights.dim}")

    def maybe_q(a):
        if quant is None:
            return a
        return kernels.quantize_dequantize(
            np.ascontiguousarray(a), quant.bits, quant.alpha, quant.beta
        )

    a = maybe_q(rmsnorm(x))
    scores = (a @ weights.w_q) @ (a @ weights.w_k).T / np.sqrt(weights.dim)
    mix = maybe_q(_softmax_rows(scores) @ (a @ weights.w_v))
    x = x + mix @ weights.w_o
    b = maybe_q(rmsnorm(x))
    gated = maybe_q(_silu(b @ weights.w_gate) * (b @ weights.w_up))
    return x + gated @ weights.w_down


def stack_forward(x, blocks, rotated_residual=False, quant=None):
    """Run several blocks in sequence on a shared residual stream."""
    for weights in blocks:
        x = block_forward(x, weights, rotated_residual, quant)
    return x


def apply_lm_head(x, weights):
    return np.asarray(x, dtype=np.float64) @ weights.w_lm_head
