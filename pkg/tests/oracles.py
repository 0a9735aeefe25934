"""Independent reference implementations used to cross-check the package.

Everything here is deliberately scalar Python (math module, lists, loops)
so it shares no code path with the numpy/cython kernels it checks.
"""

import math


def round_half_away(v):
    q = math.floor(abs(v) + 0.5)
    return -q if v < 0 else q


def quantize_token(values, bits, alpha, beta):
    """Per-token asymmetric quantization of one token, one value at a time.

    Returns (codes, scale, zero_point, constant). constant is None unless
    the clipped range collapsed, in which case every code is 0 and the
    token reconstructs to the constant.
    """
    qmax = float(2 ** bits - 1)
    hi = alpha * max(values)
    lo = beta * min(values)
    span = hi - lo
    if span <= 0.0:
        return [0] * len(values), 0.0, 0, hi
    s = span / qmax
    z = -round_half_away(lo / s)
    codes = []
    for v in values:
        q = round_half_away(v / s) + z
        q = min(max(q, 0.0), qmax)
        codes.append(int(q))
    return codes, s, int(z), None


def dequantize_token(codes, scale, zero_point, constant):
    if constant is not None:
        return [constant for _ in codes]
    return [(c - zero_point) * scale for c in codes]


def rotation_2d(theta):
    c, s = math.cos(theta), math.sin(theta)
    return [[c, s], [-s, c]]


def weighted_alignment_loss(x_rows, target_rows, weights, rot):
    total = 0.0
    for row, target, w in zip(x_rows, target_rows, weights):
        rx = row[0] * rot[0][0] + row[1] * rot[1][0]
        ry = row[0] * rot[0][1] + row[1] * rot[1][1]
        total += w * ((rx - target[0]) ** 2 + (ry - target[1]) ** 2)
    return total


def grid_min_alignment_loss(x_rows, target_rows, weights, angles=10000):
    """Minimum of the weighted alignment loss over a dense grid of planar
    rotations. The solver under test must never beat this by more than
    floating-point noise, and must never lose to it."""
    best = math.inf
    for k in range(angles):
        theta = 2.0 * math.pi * k / angles
        loss = weighted_alignment_loss(x_rows, target_rows, weights, rotation_2d(theta))
        best = min(best, loss)
    return best


def grid_min_alignment_loss_fast(x, eta, weights, angles=10000):
    """Same grid search, broadcast over all angles at once.

    Used where the scalar version would dominate the runtime budget; it
    is still a search, not a closed-form solve, so it stays an
    independent check on the SVD route.
    """
    import numpy as np

    theta = 2.0 * np.pi * np.arange(angles) / angles
    c, s = np.cos(theta), np.sin(theta)
    x0, x1 = x[:, :1], x[:, 1:2]
    rx = x0 * c - x1 * s  # (tokens, angles)
    ry = x0 * s + x1 * c
    sq = (rx - eta[:, :1]) ** 2 + (ry - eta[:, 1:2]) ** 2
    return float((weights[:, None] * sq).sum(axis=0).min())
