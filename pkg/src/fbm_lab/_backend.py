"""Select the compiled kernels when available, numpy otherwise.

Set ``FBM_LAB_BACKEND=python`` to force the numpy implementation.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _fallback


def _load_compiled() -> ModuleType | None:
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _core


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name is None:
        name = os.environ.get("FBM_LAB_BACKEND", "auto").lower()
    if name == "python":
        return _fallback
    core = _load_compiled()
    if core is None:
        if name == "cython":
            raise ImportError("compiled extension fbm_lab._core is not built")
        return _fallback
    return core


impl = get_backend()
NAME: str = impl.NAME
