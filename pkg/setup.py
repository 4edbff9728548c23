import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RLPAGERANK_NO_EXT") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rlpagerank._kernels",
                ["src/rlpagerank/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: the compiled and fallback paths must agree bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
