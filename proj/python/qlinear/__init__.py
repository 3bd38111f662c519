"""Implicit multi-quantile linear forecasting (QLinear / QNLinear / QDLinear)."""

from ._qlinear import *  # noqa: F401,F403
from ._qlinear import __version__  # noqa: F401
