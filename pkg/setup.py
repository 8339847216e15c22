"""Build the optional compiled core.

The package is fully functional without it: ``sdrsvm._backend`` falls back
to the numpy implementation when ``sdrsvm._core`` cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SDRSVM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "sdrsvm._core",
                    ["src/sdrsvm/_core.pyx"],
                    include_dirs=[np.get_include()],
                    # no fast-math / fp-contract: results must match the
                    # numpy fallback bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
