"""Build the optional compiled core; the package works without it."""

import os
import sys

from setuptools import Extension, setup


def _has_fma():
    try:
        with open("/proc/cpuinfo") as fh:
            return " fma " in fh.read().replace("\n", " ")
    except OSError:
        return False


def _extensions():
    if os.environ.get("HYPERKOG_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("Cython not found; installing the pure-Python package only", file=sys.stderr)
        return []
    # no contraction of a*b+c: the only fused operations are explicit fma calls
    cflags = ["-O3", "-ffp-contract=off", "-fno-fast-math", "-fopenmp"]
    if _has_fma():
        cflags.append("-mfma")  # inline the hardware instruction for fma()
    ext = Extension(
        "hyperkog._core",
        ["src/hyperkog/_core.pyx"],
        extra_compile_args=cflags,
        extra_link_args=["-fopenmp"],
        libraries=["m"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
