"""Build script for the compiled neighbor-selection kernel.

The extension is optional: when Cython (or a C compiler) is unavailable the
package installs without it and falls back to the pure-numpy kernel at import
time.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "labelaudit._topk",
                ["src/labelaudit/_topk.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # Contraction off keeps similarities bit-identical to the
                # numpy fallback and to plain left-to-right dot products.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
