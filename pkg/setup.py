"""Build script for the optional compiled kernels.

The package works without the extension (a pure numpy fallback is selected
at import time), so a missing compiler or Cython only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
cmdclass = {}

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "radarbev._kernels",
                sources=["src/radarbev/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off: no FMA contraction, so results stay
                # bitwise identical to the pure numpy fallback.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

if ext_modules:
    from setuptools.command.build_ext import build_ext

    class optional_build_ext(build_ext):
        """Skip the extension instead of failing the whole install."""

        def run(self):
            try:
                super().run()
            except Exception as exc:  # compiler missing or broken
                print(f"warning: building radarbev._kernels failed ({exc}); "
                      "falling back to pure python kernels")

        def build_extension(self, ext):
            try:
                super().build_extension(ext)
            except Exception as exc:
                print(f"warning: building {ext.name} failed ({exc}); "
                      "falling back to pure python kernels")

    cmdclass["build_ext"] = optional_build_ext

setup(ext_modules=ext_modules, cmdclass=cmdclass)
