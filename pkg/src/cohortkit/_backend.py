"""Select the kernel implementation at import time.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy fallback. Set ``COHORTKIT_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None


def available():
    """Names of the kernel backends importable in this installation."""
    names = ["python"]
    if _ckernels is not None:
        names.insert(0, "cython")
    return names


def get(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built in this installation")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


if os.environ.get("COHORTKIT_BACKEND", "").lower() == "python" or _ckernels is None:
    kernels = _pykernels
else:
    kernels = _ckernels
