"""Strong-convergence laboratory for SDE stability problems.

Thin re-export of the compiled extension `_sdestab`, which carries the
coefficient families, condition checks, regularization levels, noise
generators, Monte Carlo error batteries, and the drift-removing scale
transform.
"""

try:
    from ._sdestab import *  # noqa: F401,F403  (wheel layout)
    from ._sdestab import __version__  # noqa: F401
except ImportError:  # extension built next to the package (build tree)
    from _sdestab import *  # noqa: F401,F403
    from _sdestab import __version__  # noqa: F401
