"""Backend selection for the numeric inner loops.

The compiled Cython module is used when it was built; otherwise the numpy
implementation is loaded. Setting ``CHANSPARSE_PURE_PYTHON=1`` forces the
fallback, which is how the test-suite checks both backends agree.
"""
import os

if os.environ.get("CHANSPARSE_PURE_PYTHON"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        from . import _pykernels as _impl

BACKEND = "cython" if _impl.__name__.endswith("_ckernels") else "python"

gini_sorted = _impl.gini_sorted
gini_rows = _impl.gini_rows
local_maxima = _impl.local_maxima

__all__ = ["BACKEND", "gini_sorted", "gini_rows", "local_maxima"]
