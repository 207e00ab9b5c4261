"""Build script for the optional compiled kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so any failure here degrades to a warning instead of
breaking the install. Set SPIKEKIT_NO_EXT=1 to skip the build entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or toolchain missing
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(f"warning: compiled kernels not built ({exc}); "
              "the pure NumPy backend will be used")


def extensions():
    if os.environ.get("SPIKEKIT_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "spikekit._kernels._core",
        sources=["src/spikekit/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
