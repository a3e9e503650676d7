import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# -O2 without -ffast-math: simulation determinism tests rely on strict IEEE
# ordering of the kernel arithmetic.
extensions = [
    Extension(
        "sdamh._kernels.cykernels",
        ["src/sdamh/_kernels/cykernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
