"""Build hook for the compiled dispatch kernel.

The extension is optional: if Cython or a C toolchain is unavailable the
install still succeeds and the engine falls back to the pure-Python kernel.
Set OR_TWIN_NO_EXT=1 to skip the extension build entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing: pure fallback takes over
            print(f"warning: skipping compiled kernel build: {exc}", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name}: {exc}", file=sys.stderr)


def extensions():
    if os.environ.get("OR_TWIN_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available, building without compiled kernel", file=sys.stderr)
        return []
    return cythonize(
        [Extension("ortwin.engine._core", ["src/ortwin/engine/_core.pyx"])],
        language_level="3",
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
