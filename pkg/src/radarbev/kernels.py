"""Backend selection for the hot kernels.

The compiled Cython module is used when present; otherwise the pure numpy
fallback takes over. Both produce bitwise-identical results, so the choice
only affects speed. Set RADARBEV_PURE_PYTHON=1 to force the fallback
(useful for debugging and for the backend benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("RADARBEV_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

gaussian_conv2d = _impl.gaussian_conv2d
nearest_site_labels = _impl.nearest_site_labels


def backend_name() -> str:
    """'compiled' when the Cython extension is active, else 'python'."""
    return _impl.BACKEND
