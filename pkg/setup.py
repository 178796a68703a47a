import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

KDIR = os.path.join("src", "mirage", "_kernels")

ext_modules = []
if cythonize is not None and not os.environ.get("MIRAGE_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "mirage._kernels._csearch",
                [os.path.join(KDIR, "_csearch.pyx"), os.path.join(KDIR, "aes128.c")],
                include_dirs=[KDIR],
                extra_compile_args=["-O3", "-std=c99"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
