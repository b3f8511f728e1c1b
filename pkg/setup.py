import os

from setuptools import setup

ext_modules = []
if os.environ.get("TILESMITH_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/tilesmith/_core.pyx"],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        # Pure-Python install still works; the accelerated kernels are optional.
        ext_modules = []

setup(ext_modules=ext_modules)
