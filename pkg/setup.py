"""Build script: compiles the graph-kernel extension when Cython is available.

The package runs without the extension (a pure-Python fallback is selected
at import time), but the compiled kernels are what make exact betweenness
on 10k-node graphs tractable.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "netwell.graph._speedups",
                ["src/netwell/graph/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
