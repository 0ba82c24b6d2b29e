"""Backend dispatch for the numeric hot kernels.

Two interchangeable implementations exist:

* ``numba_backend`` — ``@njit``-compiled loops (default when numba imports)
* ``numpy_backend`` — pure-numpy fallback, always available

Selection happens once at import time from the ``ROLLCAST_BACKEND``
environment variable: ``auto`` (default) prefers numba and silently falls
back to numpy, ``numba`` requires numba, ``numpy`` forces the fallback.
``benchmarks/compare_backends.py`` times the two side by side.
"""

import os

from ..errors import ConfigError
from . import numpy_backend


def load_backend(name):
    """Return the kernel module for ``name`` ('numpy', 'numba' or 'auto')."""
    name = name.lower()
    if name == "numpy":
        return numpy_backend
    if name in ("numba", "auto"):
        try:
            from . import numba_backend
            return numba_backend
        except ImportError:
            if name == "numba":
                raise ConfigError(
                    "ROLLCAST_BACKEND=numba but numba is not importable"
                ) from None
            return numpy_backend
    raise ConfigError(f"unknown backend {name!r}; expected numpy, numba or auto")


_active = load_backend(os.environ.get("ROLLCAST_BACKEND", "auto"))

BACKEND = _active.NAME
lstm_forward = _active.lstm_forward
lstm_backward = _active.lstm_backward
conv1d_forward = _active.conv1d_forward
conv1d_backward = _active.conv1d_backward
harmonic_sum = _active.harmonic_sum
rk4_roll = _active.rk4_roll
