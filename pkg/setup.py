import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the pure NumPy
# implementations in otfseq._kernels._pure when this extension is absent.
extensions = [
    Extension(
        "otfseq._kernels._core",
        ["src/otfseq/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
