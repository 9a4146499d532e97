from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("egdkit._speedups", ["src/egdkit/_speedups.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # the pure-Python kernels take over
    ext_modules = []

setup(ext_modules=ext_modules)
