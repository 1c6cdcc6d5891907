"""Build script for the compiled trajectory kernel.

The extension is optional: if no C compiler (or Cython) is available the
install still succeeds and the package falls back to the pure-Python kernel
at import time.  Set PILOTBOX_NO_EXT=1 to skip the build entirely.
"""

import os
import sys

from setuptools import Extension, setup


def extensions():
    if os.environ.get("PILOTBOX_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("pilotbox: Cython not available, building without compiled kernel",
              file=sys.stderr)
        return []

    compile_args = ["-O3"]
    link_args = []
    if sys.platform.startswith("linux"):
        compile_args.append("-fopenmp")
        link_args.append("-fopenmp")

    ext = Extension(
        "pilotbox._core",
        ["src/pilotbox/_core.pyx"],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
        optional=True,
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions())
