import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "lafs._solver._dcd",
        ["src/lafs/_solver/_dcd.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]
# A failed compile must not make the package uninstallable: lafs._solver
# falls back to the pure-python kernel when the extension is missing.
for ext in extensions:
    ext.optional = True

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"})
)
