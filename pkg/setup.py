import os

from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the numpy
# implementations in ssrvpr._kernels._fallback when the extension is absent.
# Set SSRVPR_SKIP_EXT=1 to skip the build entirely.
ext_modules = []
if not os.environ.get("SSRVPR_SKIP_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "ssrvpr._kernels._core",
            sources=["src/ssrvpr/_kernels/_core.pyx"],
        )
        ext.optional = True
        ext_modules = cythonize(
            [ext], compiler_directives={"language_level": "3"}
        )

setup(ext_modules=ext_modules)
