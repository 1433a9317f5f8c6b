"""Build script: compiles the coordinate-descent kernel when Cython is available.

Set CAUSALCDF_NO_EXT=1 to skip the extension; the package then falls back to
the pure-numpy kernel at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("CAUSALCDF_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "causalcdf._cdcore",
                    ["src/causalcdf/_cdcore.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
