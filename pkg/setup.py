"""Builds the optional compiled kernels.

The package is fully functional without the extension; `gderiv._backend`
falls back to the vectorised numpy implementations when the compiled
module is absent. Set GDERIV_SKIP_EXT=1 to force a pure-Python build.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("GDERIV_SKIP_EXT"):
    try:
        from Cython.Build import cythonize
        import numpy

        ext_modules = cythonize(
            ["src/gderiv/_fastkern.pyx"],
            compiler_directives={"language_level": "3"},
        )
        for ext in ext_modules:
            ext.include_dirs.append(numpy.get_include())
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
