"""Rotation-assisted low-bit quantization of token activation matrices.

Rotating activations by an orthogonal matrix spreads rare huge channels
across the whole hidden dimension, which shrinks per-token quantization
error.  This package provides seeded rotation constructors (randomized
Hadamard, Haar-random orthogonal), a per-token asymmetric quantizer, a
massive-token detector, an alternating optimizer that fits a rotation to
a weighted quantization loss, a small transformer-style block to check
that folding a rotation into the weights leaves the network function
unchanged, and binary containers plus a CLI around all of it.
"""

__version__ = "0.1.0"

from .errors import (
    BadMagicError,
    DataError,
    DegenerateInputError,
    FormatVersionError,
    InvarianceError,
    NotOrthogonalError,
    NumericalError,
    RotquantError,
    ShapeError,
    TruncatedFileError,
    UnsupportedDimensionError,
)
from .massive import MassiveMask, detect_massive, ground_truth_mask
from .optimizer import (
    IterationRecord,
    OptimizerConfig,
    OptimizerTrace,
    centroid_step,
    optimize,
    procrustes_step,
    token_weights,
    weighted_loss,
)
from .quantizer import (
    ErrorReport,
    QuantConfig,
    QuantizedTokens,
    dequantize,
    quant_error,
    quantize_per_token,
    rtn_weight_quantize,
)
from .rotations import (
    RotationMatrix,
    enforce_rotation,
    hadamard_matrix,
    hadamard_randomized,
    identity_rotation,
    orthogonal_random,
)
from .storage import (
    TokenMatrix,
    read_bundle,
    read_dfat,
    read_dfrm,
    write_bundle,
    write_dfat,
    write_dfrm,
)
from .svgplot import scatter_svg, write_scatter_svg
from .synth import DEFAULT_SPEC, DEFAULT_TAU_REL, SynthSpec, generate, with_seed
from .toyblock import (
    ToyBlockWeights,
    apply_lm_head,
    block_forward,
    fold_rotation,
    random_weights,
    stack_forward,
)

__all__ = [
    "__version__",
    "RotquantError",
    "DataError",
    "NumericalError",
    "InvarianceError",
    "UnsupportedDimensionError",
    "ShapeError",
    "BadMagicError",
    "TruncatedFileError",
    "FormatVersionError",
    "NotOrthogonalError",
    "DegenerateInputError",
    "RotationMatrix",
    "identity_rotation",
    "hadamard_matrix",
    "hadamard_randomized",
    "orthogonal_random",
    "enforce_rotation",
    "QuantConfig",
    "QuantizedTokens",
    "ErrorReport",
    "quantize_per_token",
    "dequantize",
    "quant_error",
    "rtn_weight_quantize",
    "MassiveMask",
    "detect_massive",
    "ground_truth_mask",
    "SynthSpec",
    "DEFAULT_SPEC",
    "DEFAULT_TAU_REL",
    "generate",
    "with_seed",
    "OptimizerConfig",
    "OptimizerTrace",
    "IterationRecord",
    "optimize",
    "procrustes_step",
    "centroid_step",
    "token_weights",
    "weighted_loss",
    "ToyBlockWeights",
    "random_weights",
    "fold_rotation",
    "block_forward",
    "stack_forward",
    "apply_lm_head",
    "TokenMatrix",
    "read_dfat",
    "write_dfat",
    "read_dfrm",
    "write_dfrm",
    "read_bundle",
    "write_bundle",
    "scatter_svg",
    "write_scatter_svg",
]
