"""Build script: compiles the optional Cython projection core.

The package works without the extension (a numpy fallback is selected at
import time), so any Cython failure degrades to a pure-Python build instead
of aborting the install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "coupclust._projection",
                sources=["src/coupclust/_projection.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
