"""Build script for the optional compiled kernel extension.

The package works without the extension (pure-numpy fallback); the build
is therefore best-effort and failures degrade to the fallback.
"""

from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("msapdm.kernels._ckernels",
                   ["src/msapdm/kernels/_ckernels.pyx"],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
    include_dirs = [numpy.get_include()]
except ImportError:
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
