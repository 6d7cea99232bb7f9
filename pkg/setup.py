"""Build the optional Cython kernels.

The package works without them; ``eqmem.kernels`` falls back to the
pure-Python implementations when the extension is missing.
"""
import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "eqmem._ckernels",
        ["src/eqmem/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # no -ffast-math: results must match the Python fallback bit for bit
        extra_compile_args=["-O3"],
        libraries=["m"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
