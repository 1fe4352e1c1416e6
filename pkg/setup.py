import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the fallback kernels are used
    cythonize = None

compile_args = ["-O3"]
if os.getenv("DCMVOTER_NATIVE", None):
    compile_args.append("-march=native")

ext_modules = []
if cythonize is not None and not os.getenv("DCMVOTER_NO_EXT", None):
    ext_modules = cythonize(
        [
            Extension(
                "dcmvoter._kernels",
                ["src/dcmvoter/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=compile_args,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
