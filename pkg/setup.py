"""Builds the optional Cython span kernels. Without Cython or a C compiler the
package installs pure Python and selects the fallback at import time."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("ADVNER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("advner._kernels._ckernels", ["src/advner/_kernels/_ckernels.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
