"""Build script: compiles the optional Cython evaluation kernel.

The package works without the extension (a pure-Python backend is selected
at import time); set HAMLIN_NO_EXT=1 to skip the build deliberately.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HAMLIN_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "hamlin._kernels._tape_cy",
                    ["src/hamlin/_kernels/_tape_cy.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
