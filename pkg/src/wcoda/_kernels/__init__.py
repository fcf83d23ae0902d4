"""Hot numerical kernels: compiled extension with a numpy fallback.

The compiled module is used when it imports; set ``WCODA_PURE_PYTHON=1`` to
force the fallback. ``BACKEND`` names the active implementation.
"""

import os

from . import _pykernels as python_impl

try:
    from . import _ckernels as cython_impl
except ImportError:  # extension not built
    cython_impl = None

if cython_impl is not None and os.environ.get("WCODA_PURE_PYTHON", "") != "1":
    _impl = cython_impl
    BACKEND = "cython"
else:
    _impl = python_impl
    BACKEND = "python"

close_log_rows = _impl.close_log_rows
assemble_paths = _impl.assemble_paths
annuity_prices = _impl.annuity_prices

__all__ = ["BACKEND", "close_log_rows", "assemble_paths", "annuity_prices"]
