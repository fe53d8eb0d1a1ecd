"""Build script: compiles the optional stencil extension when Cython is available.

The package works without the extension (pure numpy kernels are selected at
import time), so any build failure here degrades gracefully to a sdist-style
install instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "nlspc._stencil",
                ["src/nlspc/_stencil.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    import sys

    print(f"nlspc: skipping compiled kernels ({exc!r}); "
          "numpy fallback will be used", file=sys.stderr)

setup(ext_modules=ext_modules)
