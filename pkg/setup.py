from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "exactqft._kernels",
                ["src/exactqft/_kernels.pyx"],
                extra_compile_args=["-O3", "-fcx-limited-range"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # no Cython: the package runs on the numpy fallback kernels
    ext_modules = []

setup(ext_modules=ext_modules)
