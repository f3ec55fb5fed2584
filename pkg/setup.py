"""Build script: compiles the optional tape-evaluation extension.

The package works without the extension (a numpy fallback is selected at
import time), so any failure to compile is downgraded to a warning.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class OptionalBuildExt(build_ext):
    # A missing compiler must not break installation; the pure-Python
    # backend takes over in that case.
    def run(self):
        try:
            super().run()
        except Exception as exc:
            sys.stderr.write(f"warning: extension build skipped ({exc})\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            sys.stderr.write(f"warning: building {ext.name} failed ({exc})\n")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        sys.stderr.write("warning: Cython not available, skipping extension\n")
        return []
    # fp-contract off keeps the compiled kernel bit-identical to the
    # numpy fallback (gcc would otherwise fuse mul-adds into FMAs)
    ext = Extension(
        "finslerflow._evalcore",
        ["src/finslerflow/_evalcore.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
