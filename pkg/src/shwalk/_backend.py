"""Select the kernel implementation at import time.

The compiled extension is used when it imports cleanly, unless the
``SHWALK_PURE_PYTHON`` environment variable is set to a non-empty value other
than ``0``.
"""
import os

from shwalk import _kernels_py


def _load():
    if os.environ.get("SHWALK_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from shwalk import _kernels
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


kernels, BACKEND = _load()
python_kernels = _kernels_py


def compiled_kernels():
    """Return the compiled module, or None if it was not built."""
    try:
        from shwalk import _kernels
    except ImportError:
        return None
    return _kernels
