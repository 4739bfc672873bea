"""Implicit solutions of u_t + lambda |grad u|^2 = 0 and the hodograph transform."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
