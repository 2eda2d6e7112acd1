"""Kernel backend selection.

Prefers the compiled extension when it was built; otherwise falls back to the
numpy implementation. Both expose the same two functions with identical
semantics, so callers never need to know which one is active.
"""

from __future__ import annotations

try:
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:  # extension not built on this platform
    from . import _kernels_py as _impl

    BACKEND = "python"

enumerate_keys = _impl.enumerate_keys
missing_per_record = _impl.missing_per_record
