"""Build script for the optional compiled kernel extension.

The package works without the extension (numpy fallback); if Cython or a C
compiler is unavailable the build degrades gracefully to pure Python.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mmg_teleop.classifier.kernels._core",
                ["src/mmg_teleop/classifier/kernels/_core.pyx"],
                extra_compile_args=["-O3", "-ffast-math", "-march=native"],
                extra_link_args=["-lmvec", "-lm"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"skipping compiled kernels ({exc}); numpy fallback will be used")

setup(ext_modules=ext_modules)
