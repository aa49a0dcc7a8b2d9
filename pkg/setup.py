"""Builds the optional compiled geometry kernels.

The package is fully functional without them (a numpy fallback is selected
at import time), so a missing Cython toolchain downgrades to a pure-Python
install instead of failing.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "uvhuman._kernels._fast",
                ["src/uvhuman/_kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
