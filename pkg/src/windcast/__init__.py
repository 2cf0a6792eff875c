"""Short-horizon wind-speed forecasting with polynomial, ARMA/ARIMA and MLP models."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
