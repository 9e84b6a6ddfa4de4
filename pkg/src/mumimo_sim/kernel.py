"""Selects the compiled cycle loop when it is built, else the Python one.

Set ``MUMIMO_SIM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernel
from ._pykernel import DONE, FULL, NEED_MORE  # noqa: F401

python_run_cycles = _pykernel.run_cycles

try:
    if os.environ.get("MUMIMO_SIM_PURE_PYTHON"):
        raise ImportError("pure-Python kernel requested")
    from ._ckernel import run_cycles as compiled_run_cycles
except ImportError:
    compiled_run_cycles = None

run_cycles = compiled_run_cycles or python_run_cycles
BACKEND = "cython" if compiled_run_cycles is not None else "python"
