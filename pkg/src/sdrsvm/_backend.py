"""Select the kernel implementation at import time.

The compiled ``_core`` extension is used when it was built; otherwise the
numpy fallback in ``_pycore``. Set ``SDRSVM_BACKEND=python`` to force the
fallback (``cython`` to require the extension).
"""
import logging
import os

from . import _pycore

logger = logging.getLogger(__name__)


def _load(name):
    if name == "python":
        return _pycore
    from . import _core

    return _core


def available():
    """Names of the backends importable in this environment."""
    names = []
    try:
        _load("cython")
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def get(name):
    return _load(name)


_requested = os.environ.get("SDRSVM_BACKEND", "").lower()
if _requested == "python":
    core = _pycore
elif _requested == "cython":
    core = _load("cython")
else:
    try:
        core = _load("cython")
    except ImportError:
        logger.debug("compiled core unavailable, using numpy fallback")
        core = _pycore

NAME = core.NAME
OPTIMAL = _pycore.OPTIMAL
UNBOUNDED = _pycore.UNBOUNDED
ITERATION_LIMIT = _pycore.ITERATION_LIMIT
STALLED = _pycore.STALLED
DANTZIG = _pycore.DANTZIG
BLAND = _pycore.BLAND
BLAND_ALWAYS = _pycore.BLAND_ALWAYS
GAUSSIAN = _pycore.GAUSSIAN
LINEAR = _pycore.LINEAR
