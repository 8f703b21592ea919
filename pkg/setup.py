import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The package falls back to the pure-Python kernels at import time.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "greenolt._kernels._speed",
                ["src/greenolt/_kernels/_speed.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
