"""Selects the compiled kernel module when available, else the numpy fallback.

Set ``LPYRAMIDS_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_MODULES = {"python": _pykernels}
if _ckernels is not None:
    _MODULES["cython"] = _ckernels


def available_backends():
    """Names of the importable kernel backends."""
    return sorted(_MODULES)


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return impl
    try:
        return _MODULES[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} not available; have {available_backends()}"
        ) from None


_requested = os.environ.get("LPYRAMIDS_BACKEND", "").strip().lower()
if _requested:
    impl = get_backend(_requested)
    BACKEND = _requested
elif _ckernels is not None:
    impl = _ckernels
    BACKEND = "cython"
else:
    impl = _pykernels
    BACKEND = "python"
