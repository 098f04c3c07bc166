"""Build script: compiles the optional Cython evaluation core.

The extension is marked optional so the package still installs (and falls
back to the pure numpy kernel) on systems without a C toolchain.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "prereqkt._evalcore",
                ["src/prereqkt/_evalcore.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
