"""Build script for the optional compiled kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so compilation failures must not fail the install.

To force a rebuild in place:

    python setup.py build_ext --inplace
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "gradualml._kernels",
                ["src/gradualml/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
