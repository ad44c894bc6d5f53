"""Build script for the compiled integration kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed compile only costs speed.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LIEQUAD_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "liequad._kernels",
                    ["src/liequad/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
