"""Build script for the compiled kernel extension.

The package is pure Python plus one optional Cython extension holding the
hot per-step kernels.  If the extension cannot be built the package still
works through the numpy reference kernels.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "waveplate.kernels._fast",
                ["src/waveplate/kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
