"""Build script for the optional compiled pairwise kernels.

The extension is a speedup, not a requirement: if Cython or a C compiler
is unavailable the package installs anyway and falls back to the NumPy
backend at import time (see uplift_rank._kernels).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "uplift_rank._kernels._pairwise_cy",
                sources=["src/uplift_rank/_kernels/_pairwise_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
