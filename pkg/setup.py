"""Builds the optional compiled kernels.

Without Cython or a C compiler the package still installs and runs on the
pure-Python kernels.
"""
import logging

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

log = logging.getLogger("setup")


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as e:  # no compiler, missing headers, ...
            log.warning("skipping compiled kernels: %s", e)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as e:
            log.warning("skipping %s: %s", ext.name, e)


try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("anonmapf._ckernels", ["src/anonmapf/_ckernels.pyx"])],
        language_level=3,
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
