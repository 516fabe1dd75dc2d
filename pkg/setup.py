from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; sepca._fallback is used at import
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "sepca._kernels",
                ["src/sepca/_kernels.pyx"],
                # keep IEEE semantics identical to the Python fallback
                extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
