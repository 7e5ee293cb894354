"""Build script for the optional compiled kernels.

The Cython extension is optional: if the compiler or Cython is missing the
package installs without it and falls back to the pure-Python kernels.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("OPTOFEEDBACK_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "optofeedback._ckernels",
                    ["src/optofeedback/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
