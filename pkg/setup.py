import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None and os.path.exists("src/handwatch/kernels/_core.pyx"):
    ext_modules = cythonize(
        [
            Extension(
                "handwatch.kernels._core",
                ["src/handwatch/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
else:
    # No Cython available: install pure-Python only, the fallback backend
    # is selected at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
