"""Picks the kernel implementation once, at import.

The compiled ``_kernels`` extension is used when it was built; set
``GUIPRUNE_PURE_PYTHON=1`` to force the numpy fallback.
"""
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

python_kernels = _pykernels
compiled_kernels = None

try:
    from . import _kernels as compiled_kernels  # type: ignore[no-redef]
except ImportError:
    log.debug("compiled kernels unavailable; using numpy fallback")

if compiled_kernels is not None and not os.environ.get("GUIPRUNE_PURE_PYTHON"):
    kernels = compiled_kernels
    BACKEND = "compiled"
else:
    kernels = python_kernels
    BACKEND = "python"


def available_backends():
    out = {"python": python_kernels}
    if compiled_kernels is not None:
        out["compiled"] = compiled_kernels
    return out
