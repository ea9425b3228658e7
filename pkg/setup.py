"""Build script for the optional compiled simulation kernel.

The package works without the extension (a pure-Python twin of the kernel is
selected at import time), so the build is marked optional: if no C compiler
or Cython is available the install still succeeds, just slower.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build-time fallback
    cythonize = None

ext_modules = []
if cythonize is not None:
    kernel = Extension(
        "emberline._kernel",
        sources=["src/emberline/_kernel.pyx"],
        # -ffp-contract=off keeps the compiled arithmetic bit-identical to the
        # pure-Python twin (no fused multiply-add surprises).
        extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
    )
    kernel.optional = True
    ext_modules = cythonize([kernel], language_level=3)

setup(ext_modules=ext_modules)
