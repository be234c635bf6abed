from setuptools import Extension, setup

# The compiled kernel module is optional: if Cython or a C compiler is
# missing, the install still succeeds and samlab falls back to the
# pure-Python kernels at import time.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "samlab._fastkernels",
                ["src/samlab/_fastkernels.pyx"],
                # -ffp-contract=off: results must be bitwise identical to
                # the pure-Python backend, so a*b+c may not fuse into fma.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
