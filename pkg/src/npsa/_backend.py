"""Pick the compiled kernels when available, else the numpy fallback.

Set ``NPSA_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("NPSA_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:
        kernels = _fallback
        COMPILED = False

BACKEND = "cython" if COMPILED else "python"

PHI_EMPIRICAL = _fallback.PHI_EMPIRICAL
PHI_EXPONENTIAL = _fallback.PHI_EXPONENTIAL
PHI_LOMAX = _fallback.PHI_LOMAX
