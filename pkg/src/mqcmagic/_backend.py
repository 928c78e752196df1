"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the NumPy reference
implementation when the extension is unavailable or when the environment
variable ``MQCMAGIC_FORCE_PY=1`` is set. Both backends are numerically
interchangeable (the test suite runs against whichever is active).
"""

from __future__ import annotations

import os

if os.environ.get("MQCMAGIC_FORCE_PY") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

wht_inplace = _impl.wht_inplace
moments_from_counts = _impl.moments_from_counts
moments_from_probs = _impl.moments_from_probs


def backend_name() -> str:
    return _impl.BACKEND
