"""Build script: compiles the optional Cython codec kernel.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a failed compile is downgraded to a warning.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "aerothz.codec._kernels",
                ["src/aerothz/codec/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"Cython codec kernel not built ({exc}); using pure-Python fallback")

setup(ext_modules=ext_modules)
