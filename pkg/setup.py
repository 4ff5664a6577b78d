"""Builds the optional compiled kernel extension.

Without Cython or a C compiler the package installs as pure Python and the
numpy kernels are used instead.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "stokes_corners._kernels_ext",
                ["src/stokes_corners/_kernels_ext.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
