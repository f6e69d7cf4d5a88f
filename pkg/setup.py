"""Build script for the optional compiled kernel core.

The package is fully functional without the extension: edgefem.kernels
falls back to the vectorized numpy implementation when the compiled
module is absent.  Building requires Cython and numpy headers.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "edgefem.kernels._core",
                ["src/edgefem/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
