# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-token quantization kernels.

Single fused pass per token: min/max scan, scale/zero-point, rounding and
reconstruction.  Must stay bit-identical to _kernels_np.py; the build
disables FP contraction for that reason.
"""

import numpy as np

from libc.math cimport fabs, floor


cdef inline double _rha(double v) noexcept nogil:
    # round-to-nearest, ties away from zero
    cdef double q = floor(fabs(v) + 0.5)
    return -q if v < 0.0 else q


def quantize_tokens(double[:, ::1] y, int bits, double alpha, double beta):
    """See _kernels_np.quantize_tokens; identical contract and output."""
    cdef Py_ssize_t t_count = y.shape[0]
    cdef Py_ssize_t dim = y.shape[1]
    cdef double qmax = <double>((1 << bits) - 1)

    codes_arr = np.zeros((t_count, dim), dtype=np.uint8)
    scales_arr = np.zeros(t_count, dtype=np.float64)
    zp_arr = np.zeros(t_count, dtype=np.int64)
    const_arr = np.zeros(t_count, dtype=np.float64)

    cdef unsigned char[:, ::1] codes = codes_arr
    cdef double[::1] scales = scales_arr
    cdef long long[::1] zp = zp_arr
    cdef double[::1] consts = const_arr

    cdef Py_ssize_t t, c
    cdef double mx, mn, span, s, z, q
    with nogil:
        for t in range(t_count):
            mx = y[t, 0]
            mn = y[t, 0]
            for c in range(1, dim):
                if y[t, c] > mx:
                    mx = y[t, c]
                if y[t, c] < mn:
                    mn = y[t, c]
            span = alpha * mx - beta * mn
            if span <= 0.0:
                # collapsed clip range: s = 0 sentinel, codes stay zero
                consts[t] = alpha * mx
                continue
            s = span / qmax
            z = -_rha(beta * mn / s)
            scales[t] = s
            zp[t] = <long long>z
            for c in range(dim):
                q = _rha(y[t, c] / s) + z
                if q < 0.0:
                    q = 0.0
                elif q > qmax:
                    q = qmax
                codes[t, c] = <unsigned char>q
    return codes_arr, scales_arr, zp_arr, const_arr


def quantize_dequantize(double[:, ::1] y, int bits, double alpha, double beta):
    """See _kernels_np.quantize_dequantize; identical contract and output."""
    cdef Py_ssize_t t_count = y.shape[0]
    cdef Py_ssize_t dim = y.shape[1]
    cdef double qmax = <double>((1 << bits) - 1)

    eta_arr = np.empty((t_count, dim), dtype=np.float64)
    cdef double[:, ::1] eta = eta_arr

    cdef Py_ssize_t t, c
    cdef double mx, mn, span, s, z, q
    with nogil:
        for t in range(t_count):
            mx = y[t, 0]
            mn = y[t, 0]
            for c in range(1, dim):
                if y[t, c] > mx:
                    mx = y[t, c]
                if y[t, c] < mn:
                    mn = y[t, c]
            span = alpha * mx - beta * mn
            if span <= 0.0:
                for c in range(dim):
                    eta[t, c] = alpha * mx
                continue
            s = span / qmax
            z = -_rha(beta * mn / s)
            for c in range(dim):
                q = _rha(y[t, c] / s) + z
                if q < 0.0:
                    q = 0.0
                elif q > qmax:
                    q = qmax
                eta[t, c] = (q - z) * s
    return eta_arr
