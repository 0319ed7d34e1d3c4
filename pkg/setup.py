import os

from setuptools import setup

ext_modules = []
if os.environ.get("ZOOMTOWER_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "zoomtower._ckernels",
                    ["src/zoomtower/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # Compiled kernels are optional; the package falls back to the
        # pure-Python implementations in zoomtower.kernels.
        ext_modules = []

setup(ext_modules=ext_modules)
