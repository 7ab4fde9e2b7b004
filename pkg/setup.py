import os.path

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The compiled kernels are optional: the package falls back to the numpy
# reference implementation when the extension is missing.
if cythonize is not None and os.path.exists("src/prevopt/_kernels/_core.pyx"):
    extensions = cythonize(
        [
            Extension(
                "prevopt._kernels._core",
                ["src/prevopt/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
else:
    extensions = []

setup(ext_modules=extensions)
