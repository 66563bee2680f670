"""Kernel backend selection.

The compiled extension ``bosemc._core`` is used when it imports; otherwise
the numpy implementations in ``bosemc._pykernels`` are used.  Both expose
``apply_diagonal`` and ``apply_bond_hop`` with identical in-place semantics.
"""

from __future__ import annotations

import logging

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _core
except ImportError:  # extension not built
    _core = None
    log.debug("compiled kernels unavailable, using numpy fallback")

BACKENDS = {"python": _pykernels}
if _core is not None:
    BACKENDS["compiled"] = _core

_active = _core if _core is not None else _pykernels


def backend_name(module=None) -> str:
    module = _active if module is None else module
    return "compiled" if module is _core else "python"


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (``None``/"auto" gives the active one)."""
    if name in (None, "auto"):
        return _active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown or unavailable kernel backend {name!r}; available: {sorted(BACKENDS)}"
        ) from None


def use_backend(name: str) -> None:
    """Switch the process-wide default backend."""
    global _active
    _active = get_backend(name)
