"""Kernel backend selection.

The hot per-pixel loops exist twice: ``_core`` (Cython extension) and
``fallback`` (NumPy). Both expose the same functions with bit-identical
results; the extension is picked when importable. Override with the
environment variable ``HANDWATCH_KERNELS=compiled|fallback`` or at runtime
with :func:`use`.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import fallback

_compiled = None
try:
    from . import _core as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

_BACKENDS = {"fallback": fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def _initial():
    requested = os.environ.get("HANDWATCH_KERNELS", "auto")
    if requested == "fallback":
        return fallback
    if requested == "compiled":
        if _compiled is None:
            raise ImportError(
                "HANDWATCH_KERNELS=compiled but the handwatch.kernels._core "
                "extension is not built"
            )
        return _compiled
    return _compiled if _compiled is not None else fallback


_active = _initial()


def active():
    """The currently selected backend module."""
    return _active


def backend_name() -> str:
    return _active.NAME


def available() -> dict:
    """Importable backends by name."""
    return dict(_BACKENDS)


def use(name: str):
    """Select a backend by name ('compiled' or 'fallback')."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {sorted(_BACKENDS)}")
    _active = _BACKENDS[name]
    return _active


@contextmanager
def using(name: str):
    """Temporarily switch backend (used by tests and the benchmark)."""
    global _active
    prev = _active
    use(name)
    try:
        yield _active
    finally:
        _active = prev
