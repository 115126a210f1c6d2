import sys

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

openmp = [] if sys.platform == "darwin" else ["-fopenmp"]

extensions = [
    Extension(
        "bomber._kernel",
        ["src/bomber/_kernel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fno-trapping-math", "-fno-signed-zeros", "-ffinite-math-only"] + openmp,
        extra_link_args=openmp,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
