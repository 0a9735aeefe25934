"""Dynamic asymmetric per-token activation quantization and RTN weight
quantization.

Per token x the scale and zero point are

    s = (alpha * max(x) - beta * min(x)) / (2^N - 1)
    z = -round(beta * min(x) / s)

with round = half away from zero, codes clamped to [0, 2^N - 1] and the
reconstruction eta = (code - z) * s.  Collapsed clip ranges carry an
s = 0 sentinel and reconstruct to the stored constant.  Error reports
measure against the original (unclipped) matrix.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._kernels_np import _round_half_away
from .errors import NumericalError, ShapeError
from .massive import coerce_flags


@dataclass
class QuantConfig:
    """Bit width and clipping ratios for per-token activation quantization."""

    bits: int = 4
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not 2 <= int(self.bits) <= 8:
            raise ValueError(f"bits must be in [2, 8], got {self.bits}")
        if not 0.0 < self.alpha <= 1.0 or not 0.0 < self.beta <= 1.0:
            raise ValueError("clipping ratios must lie in (0, 1]")

    @property
    def qmax(self):
        return 2**self.bits - 1


@dataclass
class QuantizedTokens:
    """Per-token codes plus the metadata needed to reconstruct.

    constants[t] is only meaningful for sentinel rows (scales[t] == 0)
    and holds the collapsed clip point those rows reconstruct to.
    """

    codes: np.ndarray
    scales: np.ndarray
    zero_points: np.ndarray
    constants: np.ndarray
    config: QuantConfig


def _as_matrix(x):
    arr = np.ascontiguousarray(getattr(x, "values", x), dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected a (tokens, channels) matrix, got ndim {arr.ndim}")
    return arr


def _check_finite(arr, what):
    if not np.isfinite(arr).all():
        raise NumericalError(f"{what} contains non-finite values")


def quantize_per_token(x, config=None):
    config = config or QuantConfig()
    y = _as_matrix(x)
    _check_finite(y, "activations")
    codes, scales, zero_points, constants = kernels.quantize_tokens(
        y, config.bits, config.alpha, config.beta
    )
    return QuantizedTokens(codes, scales, zero_points, constants, config)


def dequantize(q):
    """Reconstruct the float matrix; sentinel rows reproduce their constant."""
    codes = q.codes.astype(np.float64)
    z = q.zero_points.astype(np.float64)
    eta = (codes - z[:, None]) * q.scales[:, None]
    sentinel = q.scales == 0.0
    if sentinel.any():
        eta[sentinel] = q.constants[sentinel, None]
    return eta


@dataclass
class ErrorReport:
    """Per-token squared reconstruction errors with subset aggregates.

    Aggregates are plain means over the full / massive / bulk token sets;
    an empty subset contributes 0.  massive_flags is None when no mask
    was supplied (then bulk == all tokens).
    """

    per_token: np.ndarray
    mean_sq_error: float
    massive_mean_sq_error: float
    bulk_mean_sq_error: float
    massive_flags: np.ndarray | None = field(default=None)

    def to_json(self):
        payload = {
            "mean_sq_error": self.mean_sq_error,
            "massive_mean_sq_error": self.massive_mean_sq_error,
            "bulk_mean_sq_error": self.bulk_mean_sq_error,
            "per_token": [float(v) for v in self.per_token],
        }
        return json.dumps(payload)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["token_index", "is_massive", "sq_error"])
        flags = self.massive_flags
        for t, err in enumerate(self.per_token):
            is_massive = int(bool(flags[t])) if flags is not None else 0
            writer.writerow([t, is_massive, repr(float(err))])
        return buf.getvalue()


def _aggregate(per_token, flags):
    mean = float(per_token.mean()) if per_token.size else 0.0
    if flags is None:
        return mean, 0.0, mean
    massive = per_token[flags]
    bulk = per_token[~flags]
    massive_mean = float(massive.mean()) if massive.size else 0.0
    bulk_mean = float(bulk.mean()) if bulk.size else 0.0
    return mean, massive_mean, bulk_mean


def quant_error(x, rotation=None, config=None, mask=None):
    """Quantize (optionally rotated) activations and report squared errors.

    rotation may be a RotationMatrix or a raw (C, C) array; None measures
    the unrotated baseline.  mask (a MassiveMask or boolean array) splits
    the aggregates into massive and bulk means.
    """
    config = config or QuantConfig()
    y = _as_matrix(x)
    _check_finite(y, "activations")
    if rotation is not None:
        r = np.asarray(getattr(rotation, "entries", rotation), dtype=np.float64)
        if r.shape != (y.shape[1], y.shape[1]):
            raise ShapeError(
                f"rotation shape {r.shape} does not match channel count {y.shape[1]}"
            )
        y = y @ r
    eta = kernels.quantize_dequantize(y, config.bits, config.alpha, config.beta)
    per_token = np.einsum("tc,tc->t", y - eta, y - eta)
    flags = None if mask is None else coerce_flags(mask)
    if flags is not None and flags.shape[0] != per_token.shape[0]:
        raise ShapeError("mask length does not match token count")
    mean, massive_mean, bulk_mean = _aggregate(per_token, flags)
    return ErrorReport(per_token, mean, massive_mean, bulk_mean, flags)


def rtn_weight_quantize(w, bits):
    """Symmetric round-to-nearest weight quantization, one scale per row.

    Rows are treated as output channels: s_r = max|w_r| / (2^(bits-1) - 1).
    All-zero rows get the s = 0 sentinel and reconstruct to zeros.
    Returns (reconstruction, scales).
    """
    if not 2 <= int(bits) <= 8:
        raise ValueError(f"bits must be in [2, 8], got {bits}")
    w = np.ascontiguousarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ShapeError(f"expected a 2-D weight matrix, got ndim {w.ndim}")
    _check_finite(w, "weights")
    levels = float(2 ** (bits - 1) - 1)
    s = np.abs(w).max(axis=1) / levels
    safe = np.where(s == 0.0, 1.0, s)
    recon = _round_half_away(w / safe[:, None]) * safe[:, None]
    recon[s == 0.0] = 0.0
    return recon, s
