import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the C kernels bit-identical to the numpy fallback:
# both sides perform the same mul-then-add sequence per output element, and
# FMA contraction would change the rounding. Do not add -ffast-math.
extensions = [
    Extension(
        "weldwatch.kernels._conv1d",
        ["src/weldwatch/kernels/_conv1d.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
