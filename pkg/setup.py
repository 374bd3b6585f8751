import os

from setuptools import setup

ext_modules = []
if not os.environ.get("STABLELAB_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "stablelab._ckernels",
                    ["src/stablelab/_ckernels.pyx"],
                    language="c++",
                    extra_compile_args=["-O2", "-std=c++17", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
