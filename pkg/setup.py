"""Build script with an optional compiled accelerator.

The package is pure Python plus one optional Cython extension holding the
hot curve-sum kernel. If Cython or a C compiler is unavailable the build
falls back to the numpy implementation selected at import time in
``dispersive_lab.kernels``.
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
                "dispersive_lab._curve_ext",
                ["src/dispersive_lab/_curve_ext.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception:
    ext_modules = []

setup(ext_modules=ext_modules)
