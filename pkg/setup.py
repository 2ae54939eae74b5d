"""Build script for the compiled kernel core.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed compile only costs speed. Build in place with:

    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "neurosig.kernels._ckernels",
                ["src/neurosig/kernels/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    import warnings

    warnings.warn(f"Cython unavailable, building without compiled kernels: {exc}")
    extensions = []

setup(ext_modules=extensions)
