import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BI3_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "bi3._kernels",
                    ["src/bi3/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # contraction into FMA would break bitwise agreement with the numpy path
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
