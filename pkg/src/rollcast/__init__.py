"""rollcast: irregular-sea roll-motion datasets and multi-step forecasting.

Subpackages cover the pipeline end to end: ``seastate`` synthesizes the
wave field, ``rollsurrogate`` integrates the roll oscillator into
records, ``datapipe`` windows and normalizes them, ``models``/``layers``/
``gradcore`` implement the forecasters with exact gradients, ``trainer``
fits them, ``evaluator`` scores them in degrees, and ``cli`` drives the
study grids. Numeric hot loops live in ``kernels`` with numba and numpy
backends selected by the ROLLCAST_BACKEND environment variable.
"""

from . import kernels

__version__ = "0.1.0"
__all__ = ["kernels", "__version__"]
