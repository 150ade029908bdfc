"""Kernel backend selection.

The compiled extension is preferred; the pure-Python module is the fallback.
Set ``ANONMAPF_PURE_PYTHON=1`` to force the fallback.
"""
import logging
import os
from array import array

from anonmapf import _pykernels

log = logging.getLogger(__name__)

_compiled = None
if os.environ.get("ANONMAPF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from anonmapf import _ckernels as _compiled
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable, using pure Python")

kernels = _compiled if _compiled is not None else _pykernels
name = "cython" if _compiled is not None else "python"


def available():
    """Names of the backends importable in this process."""
    out = ["python"]
    try:
        from anonmapf import _ckernels  # noqa: F401
        out.insert(0, "cython")
    except ImportError:
        pass
    return out


def use(backend):
    """Switch the active backend (``"cython"`` or ``"python"``); returns the previous name."""
    global kernels, name
    prev = name
    if backend == "cython":
        from anonmapf import _ckernels
        kernels = _ckernels
    elif backend == "python":
        kernels = _pykernels
    else:
        raise ValueError(f"unknown backend {backend!r}")
    name = backend
    return prev


def int_buffer(n, fill=0):
    if fill == 0:
        return array("i", bytes(4 * n))
    if fill == -1:
        return array("i", b"\xff" * (4 * n))
    return array("i", [fill]) * n


def int_buffer_from(values):
    return array("i", values)
