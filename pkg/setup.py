"""Build hook for the optional Cython kernels.

Set CATSEG_NO_EXT=1 to skip compilation; the package then runs on its
pure-Python kernels.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("CATSEG_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "catseg._kernels",
                    ["src/catseg/_kernels.pyx"],
                    extra_compile_args=["-O3"],
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
