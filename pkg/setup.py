import numpy
from setuptools import Extension, setup

# The compiled kernel is optional: if Cython (or a C compiler) is missing the
# package installs anyway and falls back to the numpy kernels at import time.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "specrd._kernels",
                ["src/specrd/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ]
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
