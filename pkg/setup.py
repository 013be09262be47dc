import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("EQLS_NO_EXTENSION"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "eqls._kernels",
                [os.path.join("src", "eqls", "_kernels.pyx")],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fcx-limited-range"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
