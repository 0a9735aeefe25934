"""Kernel backend selection.

Prefers the compiled extension, falls back to the numpy implementation.
Both produce bit-identical outputs; set ROTQUANT_NO_EXT=1 to force the
numpy path (used by the benchmark and the equivalence tests).
"""

import os

from . import _kernels_np

if os.environ.get("ROTQUANT_NO_EXT"):
    _impl = _kernels_np
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_np
        BACKEND = "numpy"

quantize_tokens = _impl.quantize_tokens
quantize_dequantize = _impl.quantize_dequantize
