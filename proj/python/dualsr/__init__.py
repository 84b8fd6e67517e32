"""Gaussian spike super-resolution by dual certificates."""

from ._dualsr import *  # noqa: F401,F403
from ._dualsr import __version__  # noqa: F401
