import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("MUMIMO_SIM_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("mumimo_sim._ckernel", ["src/mumimo_sim/_ckernel.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
