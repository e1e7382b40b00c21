"""Pick the compiled kernels when available, else the numpy fallback.

Set ``PCASVM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pure

try:
    if os.environ.get("PCASVM_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels forced by PCASVM_PURE_PYTHON")
    from . import _core
except ImportError:
    _core = None

BACKEND = "cython" if _core is not None else "python"

jacobi_eigh = _core.jacobi_eigh if _core is not None else _pure.jacobi_eigh


def smo_solve(gram, y, C, tol, max_iter):
    """Run SMO on a dense Gram matrix with whichever backend is active."""
    if _core is not None:
        return _core.smo_solve(gram, y, C, tol, max_iter)
    return _pure.smo_solve(gram.__getitem__, gram.diagonal().copy(), y, C, tol, max_iter)
