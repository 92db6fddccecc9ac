import sys

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "specflow_lab._kernels",
                ["src/specflow_lab/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
except Exception as exc:  # pragma: no cover
    sys.stderr.write(
        "specflow-lab: building without the compiled kernel (%s); "
        "the pure-Python fallback will be used at runtime\n" % exc
    )

setup(ext_modules=ext_modules)
