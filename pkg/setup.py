"""Build script for the compiled quantization kernels.

The extension is an optimization only: rotquant falls back to the numpy
implementation at import time when the compiled module is missing, so a
failed build still yields a working (slower) package.

-ffp-contract=off keeps the compiled kernels from fusing multiply-adds,
which would break bit-identity with the numpy fallback.
"""

from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "rotquant._kernels",
        sources=["src/rotquant/_kernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
