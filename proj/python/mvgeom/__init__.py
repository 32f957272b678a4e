"""Depth-mesh feature warping and geometry-guided multi-view diffusion sampling."""

from ._mvgeom import *  # noqa: F401,F403
from ._mvgeom import __doc__  # noqa: F401

__version__ = "0.1.0"
