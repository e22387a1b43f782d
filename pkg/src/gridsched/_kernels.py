"""Select the compiled kernels when available, else the NumPy fallback.

Set ``GRIDSCHED_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

SIMPLEX_OPTIMAL = _pykernels.SIMPLEX_OPTIMAL
SIMPLEX_UNBOUNDED = _pykernels.SIMPLEX_UNBOUNDED
SIMPLEX_ITER_LIMIT = _pykernels.SIMPLEX_ITER_LIMIT

_compiled = None
if os.environ.get("GRIDSCHED_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
_active = BACKENDS[BACKEND]


def get(name=None):
    """Kernel module for ``name`` (default: the active backend)."""
    return BACKENDS[name or BACKEND]


def simplex_iterate(*args):
    return _active.simplex_iterate(*args)


def enumerate_best(*args):
    return _active.enumerate_best(*args)
