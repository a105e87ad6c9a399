import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "cjsr._kernels._core",
        ["src/cjsr/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        # the numpy fallback covers every kernel, so a failed build of the
        # fast core must not block installation
        optional=True,
    )
]

setup(
    ext_modules=(
        cythonize(extensions, compiler_directives={"language_level": "3"})
        if cythonize is not None
        else []
    )
)
