"""Select the compiled PGM kernel when available, else the numpy fallback.

Set ``FAIRCEE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pgm_py

BACKEND = "python"
run_pgm = _pgm_py.run_pgm

if os.environ.get("FAIRCEE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._pgm_core import run_pgm  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

LOGISTIC = _pgm_py.LOGISTIC
SQUARED = _pgm_py.SQUARED
