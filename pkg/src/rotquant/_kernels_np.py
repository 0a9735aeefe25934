"""Pure numpy implementation of the per-token quantization kernels.

This is the fallback used when the compiled extension is unavailable.
Both implementations must produce bit-identical codes, scales, zero
points and reconstructions; keep the floating-point operation order in
sync with _kernels.pyx when editing either.
"""

import numpy as np


def _round_half_away(v):
    # round-to-nearest, ties away from zero; np.round would round ties to even
    q = np.floor(np.abs(v) + 0.5)
    return np.where(v < 0.0, -q, q)


def quantize_tokens(y, bits, alpha, beta):
    """Asymmetric per-token min/max quantization of a (T, C) float64 matrix.

    Returns (codes uint8, scales f64, zero_points i64, constants f64).
    Rows whose clipped range collapses (alpha*max - beta*min <= 0) get the
    s = 0 sentinel: zero codes, zero zero-point and the clip point stored
    in constants.
    """
    qmax = float(2**bits - 1)
    mx = y.max(axis=1)
    mn = y.min(axis=1)
    span = alpha * mx - beta * mn
    sentinel = span <= 0.0

    s = span / qmax
    s_safe = np.where(sentinel, 1.0, s)
    z = -_round_half_away(beta * mn / s_safe)
    codes = np.clip(_round_half_away(y / s_safe[:, None]) + z[:, None], 0.0, qmax)

    codes[sentinel] = 0.0
    s[sentinel] = 0.0
    z[sentinel] = 0.0
    constants = np.where(sentinel, alpha * mx, 0.0)
    return (
        codes.astype(np.uint8),
        s,
        z.astype(np.int64),
        constants,
    )


def quantize_dequantize(y, bits, alpha, beta):
    """Fused quantize-then-reconstruct; returns the (T, C) float64 eta."""
    qmax = float(2**bits - 1)
    mx = y.max(axis=1)
    mn = y.min(axis=1)
    span = alpha * mx - beta * mn
    sentinel = span <= 0.0

    s = np.where(sentinel, 1.0, span / qmax)
    z = -_round_half_away(beta * mn / s)
    codes = np.clip(_round_half_away(y / s[:, None]) + z[:, None], 0.0, qmax)
    eta = (codes - z[:, None]) * s[:, None]
    if sentinel.any():
        eta[sentinel] = (alpha * mx)[sentinel, None]
    return eta
