"""Build script for the optional compiled evaluation core.

The package is pure Python except for skewric._evalcore, a Cython tape
interpreter used as the fast expression-evaluation backend.  If Cython or a
C compiler is unavailable the build degrades to the pure-Python backend
(skewric._evalcore_py) that is selected automatically at import time.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that downgrades compiler failures to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain
            warnings.warn(f"skipping compiled evaluation core: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"skipping compiled evaluation core: {exc}")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("skewric._evalcore", ["src/skewric/_evalcore.pyx"])],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
