"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so any failure to cythonize or compile is
downgraded to a warning and a pure-Python install.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "nlarch._kernels._fast",
                ["src/nlarch/_kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"Cython unavailable ({exc}); installing with NumPy kernels only")

setup(ext_modules=ext_modules)
