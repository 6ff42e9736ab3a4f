import os

from setuptools import Extension, setup

# The compiled kernel is an optimisation, not a requirement: the package
# falls back to a numpy implementation when the extension is unavailable.
# LEASIM_NO_EXT=1 skips the build entirely (useful on boxes without a
# C compiler).
ext_modules = []
if not os.environ.get("LEASIM_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "leasim._hotpath_cy",
                    ["src/leasim/_hotpath_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
            },
        )

setup(ext_modules=ext_modules)
