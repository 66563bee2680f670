"""Builds the optional compiled kernels; the package falls back to numpy without them."""

import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
compile_args = ["-O3"]
if os.environ.get("BOSEMC_PORTABLE") != "1":
    compile_args.append("-march=native")
if os.environ.get("BOSEMC_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "bosemc._core",
                    ["src/bosemc/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=compile_args,
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
