"""Backend selection for the ARMA recursions.

The compiled extension is preferred; the pure-Python module is used when the
extension is missing or when ``WINDCAST_PURE_PYTHON=1`` is set in the
environment before import.
"""
import os

from . import _pykernels

if os.environ.get("WINDCAST_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"

recursive_filter = _impl.recursive_filter
arma_residuals = _impl.arma_residuals
arma_filter = _impl.arma_filter
rolling_forecast = _impl.rolling_forecast

__all__ = [
    "BACKEND",
    "recursive_filter",
    "arma_residuals",
    "arma_filter",
    "rolling_forecast",
]
