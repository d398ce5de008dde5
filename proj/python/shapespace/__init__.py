"""Python access to the shapespace library.

Vertex lists are (n, 3) float64 arrays; lists of shapes are Python lists of such arrays.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
