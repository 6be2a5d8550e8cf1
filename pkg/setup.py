"""Build the optional compiled splitting kernel.

If Cython or a C compiler is missing the package still installs and uses the
numpy fallback in ``pgeq._admm_py``.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("PGEQ_NO_EXTENSION", "") not in ("1", "true", "yes"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("pgeq._admm", ["src/pgeq/_admm.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
